#pragma once

// Experiment configuration: one flat struct, readable from plain-text
// key=value files. A line "include other.cfg" pulls in another file
// (relative to the including file); later assignments win.

#include "gems/agents/reinforce.hpp"
#include "gems/belief/belief.hpp"
#include "gems/data/mf.hpp"
#include "gems/rankers/rankers.hpp"
#include "gems/vae/gems.hpp"

#include <filesystem>
#include <map>

namespace gems::harness {

enum class AgentKind { kSac, kReinforce, kNone };
std::string to_string(AgentKind k);
AgentKind parse_agent(const std::string& s);

struct ExperimentConfig {
  sim::SimConfig sim = desk_sim();
  std::uint64_t catalog_seed = 1;

  rankers::RankerKind ranker = rankers::RankerKind::kGems;
  AgentKind agent = AgentKind::kSac;
  int wknn_candidates = 10;

  vae::GemsConfig gems;
  data::MfConfig mf;
  belief::BeliefConfig belief;
  agents::SacConfig sac;
  agents::ReinforceConfig reinforce;
  std::size_t buffer_capacity = 100000;
  int update_every = 1;  // agent updates every this many environment turns

  int logged_trajectories = 2000;
  double logging_epsilon = 0.5;

  int training_steps = 5000;  // trajectories
  int validation_every = 1000;
  int validation_trajectories = 200;
  int test_trajectories = 500;
  std::vector<std::uint64_t> seeds{1};

  std::filesystem::path gems_checkpoint;
  std::filesystem::path mf_checkpoint;

  static sim::SimConfig desk_sim();

  /// Assigns one key; throws std::invalid_argument for unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  /// Every key as "key=value" lines in a fixed order; set() accepts them back.
  std::string canonical() const;
  std::uint64_t hash() const;

  std::string method_name() const;
  std::string environment_name() const;
};

/// Raw key=value pairs in file order, includes expanded.
std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in,
                                                                  const std::filesystem::path& base_dir = {});

ExperimentConfig load_config(const std::filesystem::path& path);
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace gems::harness
