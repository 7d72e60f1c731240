#include "gems/autodiff/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace gems::nn {

Var activate(Activation act, Var x) {
  switch (act) {
    case Activation::kTanh: return ad::tanh(x);
    case Activation::kRelu: return ad::relu(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

Mlp::Mlp(std::string prefix, Eigen::Index input, std::vector<Eigen::Index> hidden, Eigen::Index output,
         Activation activation)
    : prefix_(std::move(prefix)), input_(input), hidden_(std::move(hidden)), output_(output), activation_(activation) {
  if (input_ <= 0 || output_ <= 0) throw std::invalid_argument("Mlp: dimensions must be positive");
}

void Mlp::init(ParameterStore& store, Rng& rng) const {
  Eigen::Index fan_in = input_;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const Eigen::Index fan_out = l < hidden_.size() ? hidden_[l] : output_;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const std::string base = prefix_ + "." + std::to_string(l);
    store.add(base + ".w", uniform_matrix(rng, fan_in, fan_out, -bound, bound));
    store.add(base + ".b", uniform_matrix(rng, 1, fan_out, -bound, bound));
    fan_in = fan_out;
  }
}

Var Mlp::operator()(Tape& tape, ParameterStore& store, Var x, bool trainable) const {
  if (x.cols() != input_) throw std::invalid_argument("Mlp " + prefix_ + ": input width mismatch");
  Var h = x;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::string base = prefix_ + "." + std::to_string(l);
    h = ad::matmul(h, tape.parameter(store, base + ".w", trainable)) + tape.parameter(store, base + ".b", trainable);
    if (l + 1 < num_layers()) h = activate(activation_, h);
  }
  return h;
}

GruCell::GruCell(std::string prefix, Eigen::Index input, Eigen::Index hidden)
    : prefix_(std::move(prefix)), input_(input), hidden_(hidden) {
  if (input_ <= 0 || hidden_ <= 0) throw std::invalid_argument("GruCell: dimensions must be positive");
}

void GruCell::init(ParameterStore& store, Rng& rng) const {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  store.add(prefix_ + ".wx", uniform_matrix(rng, input_, 3 * hidden_, -bound, bound));
  store.add(prefix_ + ".wh", uniform_matrix(rng, hidden_, 3 * hidden_, -bound, bound));
  store.add(prefix_ + ".bx", uniform_matrix(rng, 1, 3 * hidden_, -bound, bound));
  store.add(prefix_ + ".bh", uniform_matrix(rng, 1, 3 * hidden_, -bound, bound));
}

Var GruCell::operator()(Tape& tape, ParameterStore& store, Var h_prev, Var x, bool trainable) const {
  if (h_prev.cols() != hidden_ || x.cols() != input_ || h_prev.rows() != x.rows()) {
    throw std::invalid_argument("GruCell " + prefix_ + ": shape mismatch");
  }
  const Eigen::Index H = hidden_;
  Var gx = ad::matmul(x, tape.parameter(store, prefix_ + ".wx", trainable)) +
           tape.parameter(store, prefix_ + ".bx", trainable);
  Var gh = ad::matmul(h_prev, tape.parameter(store, prefix_ + ".wh", trainable)) +
           tape.parameter(store, prefix_ + ".bh", trainable);
  Var reset = ad::logistic(ad::slice_cols(gx, 0, H) + ad::slice_cols(gh, 0, H));
  Var update = ad::logistic(ad::slice_cols(gx, H, H) + ad::slice_cols(gh, H, H));
  Var candidate = ad::tanh(ad::slice_cols(gx, 2 * H, H) + ad::cwise_product(reset, ad::slice_cols(gh, 2 * H, H)));
  return ad::cwise_product(1.0 - update, h_prev) + ad::cwise_product(update, candidate);
}

}  // namespace gems::nn
