#include "gems/agents/sac.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gems::agents {

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("SacConfig: gamma must lie in [0,1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("SacConfig: tau must lie in [0,1]");
  if (!(alpha >= 0.0)) throw std::invalid_argument("SacConfig: alpha must be non-negative");
  if (!(critic_lr > 0.0 && actor_lr > 0.0)) throw std::invalid_argument("SacConfig: learning rates must be positive");
  if (batch_size <= 0 || updates_per_step < 0) throw std::invalid_argument("SacConfig: invalid batch settings");
  if (!(log_std_min < log_std_max)) throw std::invalid_argument("SacConfig: log-std bounds out of order");
}

Var squashed_log_prob(Var u, Var log_std, Var noise) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Var gauss = -0.5 * ad::square(noise) - log_std - half_log_2pi;
  Var correction = 2.0 * (std::numbers::ln2 - u - ad::softplus(-2.0 * u));
  return ad::row_sum(gauss - correction);
}

void polyak(ParameterStore& target, const ParameterStore& source, double tau) {
  if (target.size() != source.size()) throw std::invalid_argument("polyak: stores differ in size");
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& t = target[i];
    const auto& s = source[i];
    if (t.name != s.name || t.value.rows() != s.value.rows() || t.value.cols() != s.value.cols()) {
      throw std::invalid_argument("polyak: parameter mismatch at " + t.name);
    }
    t.value = (1.0 - tau) * t.value + tau * s.value;
  }
}

SacCore::SacCore(SacConfig cfg, Eigen::Index state_dim, Eigen::Index action_dim)
    : cfg_(std::move(cfg)), state_dim_(state_dim), action_dim_(action_dim) {
  cfg_.validate();
  if (state_dim <= 0 || action_dim <= 0) throw std::invalid_argument("SacCore: dimensions must be positive");
  actor_net_ = nn::Mlp("actor", state_dim, cfg_.hidden, 2 * action_dim, nn::Activation::kRelu);
  q_nets_[0] = nn::Mlp("q1", state_dim + action_dim, cfg_.hidden, 1, nn::Activation::kRelu);
  q_nets_[1] = nn::Mlp("q2", state_dim + action_dim, cfg_.hidden, 1, nn::Activation::kRelu);
}

void SacCore::init(Rng& rng) {
  actor_ = ParameterStore{};
  critic_ = ParameterStore{};
  actor_net_.init(actor_, rng);
  q_nets_[0].init(critic_, rng);
  q_nets_[1].init(critic_, rng);
  target_ = critic_;
}

std::pair<Var, Var> SacCore::actor_head(Tape& tape, Var state, bool trainable) {
  Var out = actor_net_(tape, actor_, state, trainable);
  Var mu = ad::slice_cols(out, 0, action_dim_);
  // Smooth squash of the raw log-std into [log_std_min, log_std_max].
  const double lo = cfg_.log_std_min;
  const double half_range = 0.5 * (cfg_.log_std_max - lo);
  Var log_std = (ad::tanh(ad::slice_cols(out, action_dim_, action_dim_)) + 1.0) * half_range + lo;
  return {mu, log_std};
}

PolicySample SacCore::sample(Tape& tape, Var state, const Matrix& noise, bool trainable) {
  auto [mu, log_std] = actor_head(tape, state, trainable);
  Var eps = tape.constant(noise);
  Var u = mu + ad::cwise_product(ad::exp(log_std), eps);
  return {ad::tanh(u), squashed_log_prob(u, log_std, eps)};
}

Var SacCore::q_value(Tape& tape, int which, Var state, Var action, bool target, bool trainable) {
  ParameterStore& store = target ? target_ : critic_;
  return q_nets_[which](tape, store, ad::concat_cols({state, action}), trainable && !target);
}

Var SacCore::critic_loss(Tape& tape, Var state, const SacBatch& batch, Var next_state, const Matrix& next_noise) {
  const auto b = batch.reward.rows();
  if (batch.action.rows() != b || batch.done.rows() != b || state.rows() != b || next_state.rows() != b) {
    throw std::invalid_argument("critic_loss: batch parts disagree on size");
  }
  // Target computed on constants: y carries no gradient.
  Matrix y;
  {
    Var sn = ad::stop_gradient(next_state);
    PolicySample next = sample(tape, sn, next_noise, false);
    Var q_next = ad::cwise_min(q_value(tape, 0, sn, next.action, true, false),
                               q_value(tape, 1, sn, next.action, true, false));
    const Matrix soft = q_next.value() - cfg_.alpha * next.log_prob.value();
    y = batch.reward.array() + cfg_.gamma * (1.0 - batch.done.array()) * soft.array();
  }
  Var a = tape.constant(batch.action);
  Var target = tape.constant(y);
  Var e1 = q_value(tape, 0, state, a, false, true) - target;
  Var e2 = q_value(tape, 1, state, a, false, true) - target;
  return (ad::sum(ad::square(e1)) + ad::sum(ad::square(e2))) * (0.5 / static_cast<double>(b));
}

Var SacCore::actor_loss(Tape& tape, Var state, const Matrix& noise) {
  PolicySample s = sample(tape, state, noise, true);
  Var q = ad::cwise_min(q_value(tape, 0, state, s.action, false, false), q_value(tape, 1, state, s.action, false, false));
  return ad::mean(cfg_.alpha * s.log_prob - q);
}

void SacCore::polyak_update(double tau) { polyak(target_, critic_, tau); }

SacDiagnostics SacCore::update(const StateFn& state, const StateFn& next_state, const SacBatch& batch, Rng& rng,
                               const std::vector<ParameterStore*>& extra_critic_stores) {
  const auto b = batch.reward.rows();
  SacDiagnostics diag;
  Matrix state_values;
  {
    Tape tape;
    Var s = state(tape, true);
    Var sn = next_state(tape, false);
    const Matrix noise = gaussian_matrix(rng, b, action_dim_);
    Var loss = critic_loss(tape, s, batch, sn, noise);
    tape.backward(loss);
    diag.critic_loss = loss.scalar();
    state_values = s.value();
    ad::adam_step(critic_, ad::AdamConfig{cfg_.critic_lr});
    for (ParameterStore* extra : extra_critic_stores) ad::adam_step(*extra, ad::AdamConfig{cfg_.critic_lr});
  }
  {
    Tape tape;
    Var s = tape.constant(state_values);
    const Matrix noise = gaussian_matrix(rng, b, action_dim_);
    PolicySample ps = sample(tape, s, noise, true);
    Var q = ad::cwise_min(q_value(tape, 0, s, ps.action, false, false), q_value(tape, 1, s, ps.action, false, false));
    Var loss = ad::mean(cfg_.alpha * ps.log_prob - q);
    tape.backward(loss);
    diag.actor_loss = loss.scalar();
    diag.mean_q = q.value().mean();
    diag.mean_log_prob = ps.log_prob.value().mean();
    ad::adam_step(actor_, ad::AdamConfig{cfg_.actor_lr});
  }
  polyak_update(cfg_.tau);
  return diag;
}

Eigen::VectorXd SacCore::act(const Eigen::VectorXd& state, bool sample_mode, Rng& rng) const {
  auto& self = const_cast<SacCore&>(*this);  // non-trainable binding only reads
  Tape tape;
  Var s = tape.constant(Matrix(state.transpose()));
  auto [mu, log_std] = self.actor_head(tape, s, false);
  if (!sample_mode) return mu.value().row(0).transpose().array().tanh();
  const Matrix noise = gaussian_matrix(rng, 1, action_dim_);
  const Eigen::ArrayXd u = mu.value().row(0).transpose().array() +
                           log_std.value().row(0).transpose().array().exp() * noise.row(0).transpose().array();
  return u.tanh();
}

}  // namespace gems::agents
