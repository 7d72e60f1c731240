#pragma once

#include "gems/autodiff/parameter_store.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace gems::ad {

/// Versioned binary container: free-form text metadata plus any number of
/// named parameter stores (values, Adam moments and step counts). All numbers
/// are little-endian; doubles are written as raw IEEE-754 bits so a
/// write/read cycle is bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;
  std::map<std::string, ParameterStore> stores;

  const std::string& meta(const std::string& key) const;
  const ParameterStore& store(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the serialized bytes; used to show a checkpoint was not mutated.
std::uint64_t checkpoint_hash(const Checkpoint& ckpt);

}  // namespace gems::ad
