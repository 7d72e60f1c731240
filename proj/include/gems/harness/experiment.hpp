#pragma once

// Training and evaluation loops. One run = one config + one seed. Every
// random consumer draws from its own substream of the seed:
//   env-train / env-val / env-test   user seeds (clicks derive from them)
//   init                             network initialization
//   action                           exploration noise and random slates
//   buffer                           replay sampling and SAC update noise

#include "gems/harness/agent.hpp"

#include <iosfwd>
#include <optional>

namespace gems::harness {

struct ValidationPoint {
  int step = 0;  // training trajectories completed
  double mean_return = 0.0;

  friend bool operator==(const ValidationPoint&, const ValidationPoint&) = default;
};

struct RunRecord {
  std::string method;
  std::string environment;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<ValidationPoint> validation;
  int best_checkpoint = 0;  // index into validation
  std::vector<double> test_returns;
  double wall_clock_seconds = 0.0;

  double test_mean() const;

  /// Single-line JSON. Without wall-clock the line is a pure function of
  /// config and seed.
  std::string to_json(bool include_wall_clock = true) const;
  static RunRecord from_json(const std::string& line);
};

void append_run_record(const std::filesystem::path& path, const RunRecord& record);
std::vector<RunRecord> read_run_records(const std::filesystem::path& path);
/// Every *.jsonl file under `dir` (sorted by name), concatenated.
std::vector<RunRecord> read_run_directory(const std::filesystem::path& dir);

struct TrainOptions {
  /// When set, validation checkpoints go to ckpt-<step>.bin and the selected
  /// one to best.bin.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::ostream* log = nullptr;
};

struct TrainResult {
  RunRecord record;
  ad::Checkpoint best;
};

/// Catalog shared by every run of an environment.
sim::ItemCatalog make_catalog(const ExperimentConfig& cfg);

TrainResult train(const ExperimentConfig& cfg, std::uint64_t seed, const Artifacts& artifacts,
                  const TrainOptions& options = {});

/// One row per recommended item, for boredom and relevance analysis.
struct DiagnosticRow {
  int episode = 0;
  int turn = 0;
  int slot = 0;
  int item = 0;
  double relevance = 0.0;  // true relevance at serving time, boredom applied
  bool topic_bored = false;
  int bored_topics = 0;    // topics bored at serving time
  bool clicked = false;
};

void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticRow>& rows);

/// Deterministic-policy returns on fresh users from `stream`. Reads the
/// checkpoint only. Filling `diagnostics` reads the true user state.
std::vector<double> evaluate(const ExperimentConfig& cfg, const Artifacts& artifacts, const ad::Checkpoint& checkpoint,
                             int num_trajectories, std::uint64_t seed, const std::string& stream = "env-test",
                             std::vector<DiagnosticRow>* diagnostics = nullptr);

/// Agent checkpoint plus the config and seed that produced it.
ad::Checkpoint run_checkpoint(const ExperimentConfig& cfg, std::uint64_t seed, int step, const ad::Checkpoint& agent);
/// Config stored in a run checkpoint.
ExperimentConfig checkpoint_config(const ad::Checkpoint& ckpt);

}  // namespace gems::harness
