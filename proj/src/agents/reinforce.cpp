#include "gems/agents/reinforce.hpp"

#include <numeric>
#include <stdexcept>

namespace gems::agents {

void ReinforceConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("ReinforceConfig: gamma must lie in [0,1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("ReinforceConfig: learning rate must be positive");
  if (!(baseline_decay >= 0.0 && baseline_decay <= 1.0)) {
    throw std::invalid_argument("ReinforceConfig: baseline decay must lie in [0,1]");
  }
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

SoftmaxPolicy::SoftmaxPolicy(ReinforceConfig cfg, Eigen::Index state_dim, int num_items)
    : cfg_(std::move(cfg)), state_dim_(state_dim), num_items_(num_items) {
  cfg_.validate();
  if (state_dim <= 0 || num_items <= 0) throw std::invalid_argument("SoftmaxPolicy: dimensions must be positive");
  net_ = nn::Mlp("policy", state_dim, cfg_.hidden, num_items, nn::Activation::kRelu);
}

void SoftmaxPolicy::init(Rng& rng) {
  store_ = ParameterStore{};
  net_.init(store_, rng);
  baseline_ = 0.0;
}

Var SoftmaxPolicy::log_probs(Tape& tape, Var states, bool trainable) {
  return ad::log_softmax(net_(tape, store_, states, trainable));
}

Eigen::VectorXd SoftmaxPolicy::logits(const Eigen::VectorXd& state) const {
  auto& self = const_cast<SoftmaxPolicy&>(*this);  // non-trainable binding only reads
  Tape tape;
  return self.net_(tape, self.store_, tape.constant(Matrix(state.transpose())), false).value().row(0).transpose();
}

ReinforceDiagnostics SoftmaxPolicy::update(const StateFn& states, const std::vector<std::vector<int>>& slates,
                                           std::span<const double> rewards,
                                           const std::vector<ParameterStore*>& extra_stores) {
  if (slates.size() != rewards.size() || slates.empty()) {
    throw std::invalid_argument("reinforce: slates and rewards must align and be non-empty");
  }
  const std::vector<double> g = discounted_returns(rewards, cfg_.gamma);
  const auto turns = static_cast<Eigen::Index>(g.size());
  ReinforceDiagnostics diag;
  diag.baseline = baseline_;
  diag.mean_return = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());

  // weight(t, i) = (G_t - b) * number of draws of item i at turn t
  Matrix weight = Matrix::Zero(turns, num_items_);
  for (Eigen::Index t = 0; t < turns; ++t) {
    for (int item : slates[static_cast<std::size_t>(t)]) {
      if (item < 0 || item >= num_items_) throw std::out_of_range("reinforce: item id out of range");
      weight(t, item) += g[static_cast<std::size_t>(t)] - baseline_;
    }
  }
  Tape tape;
  Var s = states(tape, true);
  if (s.rows() != turns) throw std::invalid_argument("reinforce: state rows differ from episode length");
  Var loss = -ad::sum(ad::cwise_product(log_probs(tape, s, true), tape.constant(weight)));
  tape.backward(loss);
  diag.loss = loss.scalar();
  ad::adam_step(store_, ad::AdamConfig{cfg_.learning_rate});
  for (ParameterStore* extra : extra_stores) ad::adam_step(*extra, ad::AdamConfig{cfg_.learning_rate});

  baseline_ = cfg_.baseline_decay * baseline_ + (1.0 - cfg_.baseline_decay) * diag.mean_return;
  return diag;
}

}  // namespace gems::agents
