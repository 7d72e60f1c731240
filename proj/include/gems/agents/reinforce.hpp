#pragma once

// REINFORCE for the SoftMax baseline: a policy head emits one logit per item
// and slates are k independent draws from the resulting softmax.

#include "gems/agents/sac.hpp"

namespace gems::agents {

struct ReinforceConfig {
  double gamma = 0.8;
  double learning_rate = 1e-3;
  double baseline_decay = 0.9;  // b <- decay * b + (1 - decay) * mean return
  std::vector<Eigen::Index> hidden{256, 256};

  void validate() const;
};

struct ReinforceDiagnostics {
  double loss = 0.0;
  double mean_return = 0.0;
  double baseline = 0.0;  // value used for this update
};

/// G_t = r_t + gamma * G_{t+1}.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

class SoftmaxPolicy {
 public:
  SoftmaxPolicy() = default;
  SoftmaxPolicy(ReinforceConfig cfg, Eigen::Index state_dim, int num_items);

  void init(Rng& rng);

  const ReinforceConfig& config() const { return cfg_; }
  int num_items() const { return num_items_; }
  Eigen::Index state_dim() const { return state_dim_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  double baseline() const { return baseline_; }
  void set_baseline(double b) { baseline_ = b; }

  /// Row-wise log-softmax over items, [B x num_items].
  Var log_probs(Tape& tape, Var states, bool trainable);
  Eigen::VectorXd logits(const Eigen::VectorXd& state) const;

  /// One policy-gradient step over a finished episode. `states` builds the
  /// [T x state_dim] node; slates[t] holds the items drawn at turn t.
  /// Extra stores (e.g. the belief) get an Adam step as well.
  ReinforceDiagnostics update(const StateFn& states, const std::vector<std::vector<int>>& slates,
                              std::span<const double> rewards, const std::vector<ParameterStore*>& extra_stores = {});

 private:
  ReinforceConfig cfg_;
  Eigen::Index state_dim_ = 0;
  int num_items_ = 0;
  nn::Mlp net_;
  ParameterStore store_;
  double baseline_ = 0.0;
};

}  // namespace gems::agents
