#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gems::ad {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A named trainable tensor with its gradient accumulator and Adam moments.
template <typename Scalar>
struct BasicParameter {
  std::string name;
  MatrixX<Scalar> value;
  MatrixX<Scalar> grad;
  MatrixX<Scalar> adam_m;
  MatrixX<Scalar> adam_v;
};

/// Ordered collection of named parameters. Names are unique and every entry
/// keeps value/grad/m/v at identical shapes.
template <typename Scalar>
class BasicParameterStore {
 public:
  using Matrix = MatrixX<Scalar>;
  using Parameter = BasicParameter<Scalar>;

  Parameter& add(std::string name, Matrix init) {
    if (index_.count(name) != 0) {
      throw std::invalid_argument("duplicate parameter name: " + name);
    }
    Parameter p;
    p.name = name;
    p.grad = Matrix::Zero(init.rows(), init.cols());
    p.adam_m = Matrix::Zero(init.rows(), init.cols());
    p.adam_v = Matrix::Zero(init.rows(), init.cols());
    p.value = std::move(init);
    index_.emplace(std::move(name), params_.size());
    params_.push_back(std::move(p));
    return params_.back();
  }

  bool contains(std::string_view name) const {
    return index_.count(std::string(name)) != 0;
  }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
      throw std::out_of_range("unknown parameter: " + std::string(name));
    }
    return it->second;
  }

  Parameter& at(std::string_view name) { return params_[index_of(name)]; }
  const Parameter& at(std::string_view name) const { return params_[index_of(name)]; }

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::int64_t step_count() const { return step_count_; }
  void set_step_count(std::int64_t n) { step_count_ = n; }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  friend bool operator==(const BasicParameterStore& a, const BasicParameterStore& b) {
    if (a.step_count_ != b.step_count_ || a.params_.size() != b.params_.size()) return false;
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
      const auto& x = a.params_[i];
      const auto& y = b.params_[i];
      if (x.name != y.name || x.value.rows() != y.value.rows() || x.value.cols() != y.value.cols()) {
        return false;
      }
      if (x.value != y.value || x.adam_m != y.adam_m || x.adam_v != y.adam_v) return false;
    }
    return true;
  }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t step_count_ = 0;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
      throw std::invalid_argument("AdamConfig requires 0<beta1<1, 0<beta2<1, epsilon>0");
    }
  }
};

/// Bias-corrected Adam update over every entry, then clears the gradients.
template <typename Scalar>
void adam_step(BasicParameterStore<Scalar>& store, const AdamConfig& cfg) {
  cfg.validate();
  for (const auto& p : store) {
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw std::invalid_argument("gradient shape mismatch for parameter " + p.name);
    }
  }
  const std::int64_t t = store.step_count() + 1;
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t));
  const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t));
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  for (auto& p : store) {
    p.adam_m = b1 * p.adam_m + (Scalar(1) - b1) * p.grad;
    p.adam_v = b2 * p.adam_v + (Scalar(1) - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (p.adam_m.array() / c1) / ((p.adam_v.array() / c2).sqrt() + eps);
    p.grad.setZero();
  }
  store.set_step_count(t);
}

using Matrix = MatrixX<double>;
using Parameter = BasicParameter<double>;
using ParameterStore = BasicParameterStore<double>;

}  // namespace gems::ad
