#pragma once

// Soft actor-critic over a bounded continuous action space [-1, 1]^d with a
// tanh-squashed Gaussian actor, twin critics and polyak-averaged targets.
// The state is supplied by the caller as a tape node so the same core serves
// the belief-encoder agent and plain-vector test problems.

#include "gems/autodiff/layers.hpp"

#include <functional>

namespace gems::agents {

using ad::Matrix;
using ad::ParameterStore;
using ad::Tape;
using ad::Var;

struct SacConfig {
  double gamma = 0.8;
  double tau = 0.002;
  double alpha = 0.2;
  double critic_lr = 1e-3;
  double actor_lr = 3e-3;
  int batch_size = 256;
  int updates_per_step = 1;
  std::vector<Eigen::Index> hidden{256, 256};
  double log_std_min = -5.0;
  double log_std_max = 2.0;

  void validate() const;
};

struct PolicySample {
  Var action;    // [B x d], strictly inside (-1, 1)
  Var log_prob;  // [B x 1], includes the tanh change of variables
};

struct SacDiagnostics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_q = 0.0;
  double mean_log_prob = 0.0;
};

/// Batch of replayed transitions in matrix form.
struct SacBatch {
  Matrix action;  // [B x d]
  Matrix reward;  // [B x 1]
  Matrix done;    // [B x 1], 1 for terminal
};

/// Builds the [B x state_dim] state node on a tape; `trainable` tells whether
/// gradients should reach whatever parameters produce it.
using StateFn = std::function<Var(Tape&, bool trainable)>;

class SacCore {
 public:
  SacCore() = default;
  SacCore(SacConfig cfg, Eigen::Index state_dim, Eigen::Index action_dim);

  /// Fresh parameters; targets start equal to the critics.
  void init(Rng& rng);

  const SacConfig& config() const { return cfg_; }
  SacConfig& mutable_config() { return cfg_; }
  Eigen::Index state_dim() const { return state_dim_; }
  Eigen::Index action_dim() const { return action_dim_; }

  ParameterStore& actor_store() { return actor_; }
  ParameterStore& critic_store() { return critic_; }
  ParameterStore& target_store() { return target_; }
  const ParameterStore& actor_store() const { return actor_; }
  const ParameterStore& critic_store() const { return critic_; }
  const ParameterStore& target_store() const { return target_; }

  /// mu and bounded log-std of the pre-squash Gaussian.
  std::pair<Var, Var> actor_head(Tape& tape, Var state, bool trainable);
  /// a = tanh(mu + sigma * noise) with its log-density.
  PolicySample sample(Tape& tape, Var state, const Matrix& noise, bool trainable);
  /// Critic `which` (0 or 1), from the target store if `target`.
  Var q_value(Tape& tape, int which, Var state, Var action, bool target, bool trainable);

  Var critic_loss(Tape& tape, Var state, const SacBatch& batch, Var next_state, const Matrix& next_noise);
  Var actor_loss(Tape& tape, Var state, const Matrix& noise);

  /// target <- (1 - tau) * target + tau * critic.
  void polyak_update(double tau);

  /// One critic step (also stepping `extra_critic_stores`, e.g. the belief),
  /// one actor step on the pre-update state values, one polyak step.
  SacDiagnostics update(const StateFn& state, const StateFn& next_state, const SacBatch& batch, Rng& rng,
                        const std::vector<ParameterStore*>& extra_critic_stores = {});

  /// Mean mode returns tanh(mu); sample mode draws from the squashed Gaussian.
  Eigen::VectorXd act(const Eigen::VectorXd& state, bool sample, Rng& rng) const;

 private:
  SacConfig cfg_;
  Eigen::Index state_dim_ = 0;
  Eigen::Index action_dim_ = 0;
  nn::Mlp actor_net_;
  nn::Mlp q_nets_[2];
  ParameterStore actor_;
  ParameterStore critic_;
  ParameterStore target_;
};

/// log pi(a) of tanh(u), u ~ N(mu, sigma^2), given the pre-squash sample via
/// its standard-normal noise: sum_i [log N(noise_i) - log sigma_i
/// - log(1 - tanh(u_i)^2)], the last term as 2 (log 2 - u - softplus(-2u)).
Var squashed_log_prob(Var u, Var log_std, Var noise);

void polyak(ParameterStore& target, const ParameterStore& source, double tau);

}  // namespace gems::agents
