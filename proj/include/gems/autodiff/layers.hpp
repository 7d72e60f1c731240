#pragma once

#include "gems/autodiff/tape.hpp"
#include "gems/util/random.hpp"

#include <string>
#include <vector>

namespace gems::nn {

using ad::Matrix;
using ad::ParameterStore;
using ad::Tape;
using ad::Var;

enum class Activation { kTanh, kRelu, kIdentity };

Var activate(Activation act, Var x);

/// Fully connected stack. Parameters live in a store under
/// "<prefix>.<layer>.w" ([in x out]) and "<prefix>.<layer>.b" ([1 x out]).
/// The activation is applied after every hidden layer, never after the last.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string prefix, Eigen::Index input, std::vector<Eigen::Index> hidden, Eigen::Index output,
      Activation activation);

  /// Adds freshly initialized parameters (uniform +-1/sqrt(fan_in)).
  void init(ParameterStore& store, Rng& rng) const;

  Var operator()(Tape& tape, ParameterStore& store, Var x, bool trainable = true) const;

  Eigen::Index input_dim() const { return input_; }
  Eigen::Index output_dim() const { return output_; }
  const std::string& prefix() const { return prefix_; }
  std::size_t num_layers() const { return hidden_.size() + 1; }

 private:
  std::string prefix_;
  Eigen::Index input_ = 0;
  std::vector<Eigen::Index> hidden_;
  Eigen::Index output_ = 0;
  Activation activation_ = Activation::kTanh;
};

/// Gated recurrent unit, batched over rows:
///   r  = logistic(x Wr + br + h Ur + cr)
///   u  = logistic(x Wu + bu + h Uu + cu)
///   n  = tanh(x Wn + bn + r * (h Un + cn))
///   h' = (1 - u) * h + u * n
/// Gates are packed as [r | u | n] in "<prefix>.wx" [in x 3H], "<prefix>.wh"
/// [H x 3H], "<prefix>.bx" and "<prefix>.bh" [1 x 3H].
class GruCell {
 public:
  GruCell() = default;
  GruCell(std::string prefix, Eigen::Index input, Eigen::Index hidden);

  void init(ParameterStore& store, Rng& rng) const;

  Var operator()(Tape& tape, ParameterStore& store, Var h_prev, Var x, bool trainable = true) const;

  Eigen::Index input_dim() const { return input_; }
  Eigen::Index hidden_dim() const { return hidden_; }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
  Eigen::Index input_ = 0;
  Eigen::Index hidden_ = 0;
};

}  // namespace gems::nn
