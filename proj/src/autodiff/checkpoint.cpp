#include "gems/autodiff/checkpoint.hpp"

#include "gems/util/binary_io.hpp"
#include "gems/util/random.hpp"

#include <fstream>
#include <sstream>

namespace gems::ad {
namespace {

constexpr char kMagic[9] = "GEMSCKPT";

void write_matrix(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  const auto bytes = static_cast<std::streamsize>(m.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(m.data()), bytes);
  if (in.gcount() != bytes) throw io::FormatError("truncated parameter data");
  return m;
}

}  // namespace

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw std::out_of_range("checkpoint has no metadata key " + key);
  return it->second;
}

const ParameterStore& Checkpoint::store(const std::string& name) const {
  auto it = stores.find(name);
  if (it == stores.end()) throw std::out_of_range("checkpoint has no store " + name);
  return it->second;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  io::write_magic(out, kMagic);
  io::write_pod<std::uint32_t>(out, Checkpoint::kVersion);
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    io::write_string(out, k);
    io::write_string(out, v);
  }
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.stores.size()));
  for (const auto& [name, store] : ckpt.stores) {
    io::write_string(out, name);
    io::write_pod<std::int64_t>(out, store.step_count());
    io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& p : store) {
      io::write_string(out, p.name);
      io::write_pod<std::uint32_t>(out, 2);
      io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
      io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
      write_matrix(out, p.value);
      write_matrix(out, p.adam_m);
      write_matrix(out, p.adam_v);
    }
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  io::expect_magic(in, kMagic);
  const auto version = io::read_pod<std::uint32_t>(in);
  if (version != Checkpoint::kVersion) {
    throw io::FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_meta = io::read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = io::read_string(in);
    ckpt.metadata[k] = io::read_string(in);
  }
  const auto n_stores = io::read_pod<std::uint32_t>(in);
  for (std::uint32_t s = 0; s < n_stores; ++s) {
    std::string name = io::read_string(in);
    ParameterStore store;
    store.set_step_count(io::read_pod<std::int64_t>(in));
    const auto n_params = io::read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_params; ++i) {
      std::string pname = io::read_string(in);
      const auto ndim = io::read_pod<std::uint32_t>(in);
      if (ndim != 2) throw io::FormatError("only 2-d parameters are supported");
      const auto rows = static_cast<Eigen::Index>(io::read_pod<std::uint64_t>(in));
      const auto cols = static_cast<Eigen::Index>(io::read_pod<std::uint64_t>(in));
      auto& p = store.add(std::move(pname), read_matrix(in, rows, cols));
      p.adam_m = read_matrix(in, rows, cols);
      p.adam_v = read_matrix(in, rows, cols);
    }
    ckpt.stores.emplace(std::move(name), std::move(store));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

std::uint64_t checkpoint_hash(const Checkpoint& ckpt) {
  std::ostringstream buf(std::ios::binary);
  write_checkpoint(buf, ckpt);
  return fnv1a(buf.str());
}

}  // namespace gems::ad
