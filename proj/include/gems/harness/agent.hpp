#pragma once

// Policies the harness can train and evaluate. An Agent sees the environment
// only through act()/observe(); the oracle and the ideal-embedding variants
// ask the environment for disclosure explicitly.

#include "gems/agents/reinforce.hpp"
#include "gems/agents/replay.hpp"
#include "gems/autodiff/checkpoint.hpp"
#include "gems/harness/config.hpp"

#include <memory>
#include <optional>

namespace gems::harness {

using sim::Slate;

/// Pretrained inputs some rankers need.
struct Artifacts {
  std::optional<vae::GemsModel> gems;
  std::optional<Eigen::MatrixXd> mf_embeddings;
};

/// Loads whatever `cfg` requires from its artifact paths; throws
/// std::runtime_error naming the missing file.
Artifacts load_artifacts(const ExperimentConfig& cfg);

void save_embeddings(const std::filesystem::path& path, const Eigen::MatrixXd& table);
Eigen::MatrixXd load_embeddings(const std::filesystem::path& path);

/// Belief input embeddings matched to the ranker.
belief::EmbeddingSource embedding_source_for(rankers::RankerKind ranker);

struct UpdateStats {
  int updates = 0;
  double critic_loss = 0.0;  // last update; policy loss for REINFORCE
  double actor_loss = 0.0;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual void begin_episode() = 0;
  /// `explore` selects sampling mode; otherwise the deterministic policy.
  virtual Slate act(sim::Environment& env, bool explore, Rng& rng) = 0;
  /// Feedback for the slate returned by the last act().
  virtual void observe(const Slate& slate, const sim::ClickVector& clicks, double reward, bool done) = 0;
  /// Called every `update_every` training turns.
  virtual UpdateStats update(Rng& rng) {
    (void)rng;
    return {};
  }
  /// Called after the last turn of a training episode.
  virtual UpdateStats end_episode() { return {}; }

  /// Learned state (parameters, optimizer moments, baselines).
  virtual ad::Checkpoint checkpoint() const = 0;
  virtual void restore(const ad::Checkpoint& ckpt) = 0;
};

/// Builds the agent for cfg.agent/cfg.ranker, initialized from `init_seed`.
/// Ideal-embedding rankers read the catalog through env.disclosed().
std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, const Artifacts& artifacts, sim::Environment& env,
                                  std::uint64_t init_seed);

}  // namespace gems::harness
