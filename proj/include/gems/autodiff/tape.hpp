#pragma once

// Define-by-run reverse-mode differentiation over dense matrices.
//
// A tape owns every node created during one forward pass. Nodes only refer to
// earlier nodes, so creation order is a topological order and backward() is a
// single reverse sweep. All values are 2-D (rows x cols); binary elementwise
// ops broadcast an operand whose rows or cols equal 1.

#include "gems/autodiff/parameter_store.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace gems::ad {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t {
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kTanh,
  kLogistic,
  kRelu,
  kSoftplus,
  kExp,
  kLog,
  kSquare,
  kLogSoftmax,
  kConcat,
  kSlice,
  kSum,
  kMean,
  kRowSum,
  kTranspose,
  kGatherRows,
  kMinimum,
};

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scalar-scale";
    case Op::kAddScalar: return "add-scalar";
    case Op::kTanh: return "tanh";
    case Op::kLogistic: return "logistic";
    case Op::kRelu: return "relu";
    case Op::kSoftplus: return "softplus";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSquare: return "square";
    case Op::kLogSoftmax: return "softmax-log";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kRowSum: return "row-sum";
    case Op::kTranspose: return "transpose";
    case Op::kGatherRows: return "gather-rows";
    case Op::kMinimum: return "minimum";
  }
  return "?";
}

template <typename Scalar>
class BasicTape;

/// Lightweight handle to a node on a tape.
template <typename Scalar>
class BasicVar {
 public:
  using Matrix = MatrixX<Scalar>;

  BasicVar() = default;
  BasicVar(BasicTape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const { return tape_->value(id_); }
  const Matrix& grad() const { return tape_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const {
    if (value().size() != 1) throw std::logic_error("scalar() on non-scalar node");
    return value()(0, 0);
  }

  BasicTape<Scalar>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  BasicTape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class BasicTape {
 public:
  using Matrix = MatrixX<Scalar>;
  using Var = BasicVar<Scalar>;
  using Store = BasicParameterStore<Scalar>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  const Matrix& grad(std::size_t id) const { return nodes_.at(id).grad; }
  Op op(std::size_t id) const { return nodes_.at(id).op; }

  Var constant(Matrix value) { return push(Op::kConstant, std::move(value), {}, false); }

  Var constant(Scalar x) { return constant(Matrix::Constant(1, 1, x)); }

  /// Differentiable leaf that is not bound to a store (used by tests and
  /// by callers that want d(root)/d(input)).
  Var variable(Matrix value) { return push(Op::kConstant, std::move(value), {}, true); }

  /// Binds a store entry into the graph. Repeated calls return the same node
  /// so a parameter shared across time steps accumulates a single gradient.
  /// With trainable=false the parameter participates as a constant.
  Var parameter(Store& store, std::string_view name, bool trainable = true) {
    const std::size_t index = store.index_of(name);
    const auto key = std::make_tuple(static_cast<const void*>(&store), index, trainable);
    if (auto it = bound_.find(key); it != bound_.end()) return Var(this, it->second);
    Var v = push(Op::kParameter, store[index].value, {}, trainable);
    nodes_[v.id()].store = trainable ? &store : nullptr;
    nodes_[v.id()].entry = index;
    bound_.emplace(key, v.id());
    return v;
  }

  /// Reverse sweep from a 1x1 root. Node gradients are reset first; bound
  /// trainable parameters then have their store gradients incremented.
  void backward(Var root) {
    if (root.tape() != this) throw std::invalid_argument("backward: root belongs to another tape");
    const Matrix& rv = nodes_[root.id()].value;
    if (rv.rows() != 1 || rv.cols() != 1) {
      throw std::invalid_argument("backward: root must be scalar-valued");
    }
    for (auto& n : nodes_) {
      if (n.needs_grad) {
        n.grad.setZero(n.value.rows(), n.value.cols());
      } else {
        n.grad.resize(0, 0);
      }
    }
    if (!nodes_[root.id()].needs_grad) return;
    nodes_[root.id()].grad(0, 0) = Scalar(1);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.args.empty()) continue;
      if (!n.grad.allFinite()) {
        throw NonFiniteError("non-finite gradient at node " + std::to_string(i) + " (" +
                             std::string(op_name(n.op)) + ")");
      }
      pull(i);
    }
    for (auto& n : nodes_) {
      if (n.op == Op::kParameter && n.store != nullptr) {
        if (!n.grad.allFinite()) throw NonFiniteError("non-finite parameter gradient");
        (*n.store)[n.entry].grad += n.grad;
      }
    }
  }

  // ---- forward ops (public entry points are the free functions below) ----

  Var matmul(Var a, Var b) {
    const Matrix& x = value(a.id());
    const Matrix& y = value(b.id());
    if (x.cols() != y.rows()) throw shape_error("matmul", x, y);
    return push(Op::kMatMul, x * y, {a.id(), b.id()});
  }

  Var binary(Op op, Var a, Var b) {
    const Matrix& x = value(a.id());
    const Matrix& y = value(b.id());
    const Eigen::Index rows = std::max(x.rows(), y.rows());
    const Eigen::Index cols = std::max(x.cols(), y.cols());
    if (!broadcastable(x, rows, cols) || !broadcastable(y, rows, cols)) {
      throw shape_error(op_name(op), x, y);
    }
    const Matrix xe = expand(x, rows, cols);
    const Matrix ye = expand(y, rows, cols);
    Matrix out;
    switch (op) {
      case Op::kAdd: out = xe + ye; break;
      case Op::kSub: out = xe - ye; break;
      case Op::kMul: out = xe.cwiseProduct(ye); break;
      case Op::kMinimum: out = xe.cwiseMin(ye); break;
      default: throw std::logic_error("binary: unsupported op");
    }
    return push(op, std::move(out), {a.id(), b.id()});
  }

  Var scale(Var a, Scalar s) {
    Var v = push(Op::kScale, value(a.id()) * s, {a.id()});
    nodes_[v.id()].scalar_arg = s;
    return v;
  }

  Var add_scalar(Var a, Scalar s) {
    return push(Op::kAddScalar, (value(a.id()).array() + s).matrix(), {a.id()});
  }

  Var unary(Op op, Var a) {
    const auto x = value(a.id()).array();
    Matrix out;
    switch (op) {
      case Op::kTanh: out = x.tanh().matrix(); break;
      case Op::kLogistic: out = (Scalar(1) / (Scalar(1) + (-x).exp())).matrix(); break;
      case Op::kRelu: out = x.max(Scalar(0)).matrix(); break;
      case Op::kSoftplus:
        out = (x.max(Scalar(0)) + (-(x.abs())).exp().log1p()).matrix();
        break;
      case Op::kExp: out = x.exp().matrix(); break;
      case Op::kLog: out = x.log().matrix(); break;
      case Op::kSquare: out = x.square().matrix(); break;
      case Op::kTranspose: out = value(a.id()).transpose(); break;
      default: throw std::logic_error("unary: unsupported op");
    }
    return push(op, std::move(out), {a.id()});
  }

  Var log_softmax(Var a) {
    const Matrix& x = value(a.id());
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const Scalar m = x.row(r).maxCoeff();
      const Scalar lse = m + std::log((x.row(r).array() - m).exp().sum());
      out.row(r) = x.row(r).array() - lse;
    }
    return push(Op::kLogSoftmax, std::move(out), {a.id()});
  }

  Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const Eigen::Index rows = value(parts[0].id()).rows();
    Eigen::Index cols = 0;
    std::vector<std::size_t> ids;
    ids.reserve(parts.size());
    for (const Var& p : parts) {
      if (value(p.id()).rows() != rows) throw shape_error("concat", value(parts[0].id()), value(p.id()));
      cols += value(p.id()).cols();
      ids.push_back(p.id());
    }
    Matrix out(rows, cols);
    Eigen::Index offset = 0;
    for (const Var& p : parts) {
      const Matrix& x = value(p.id());
      out.middleCols(offset, x.cols()) = x;
      offset += x.cols();
    }
    return push(Op::kConcat, std::move(out), std::move(ids));
  }

  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    const Matrix& x = value(a.id());
    if (start < 0 || count < 0 || start + count > x.cols()) {
      throw std::invalid_argument("slice: column range out of bounds");
    }
    Var v = push(Op::kSlice, x.middleCols(start, count), {a.id()});
    nodes_[v.id()].int_arg = start;
    return v;
  }

  Var reduce(Op op, Var a) {
    const Matrix& x = value(a.id());
    Matrix out;
    switch (op) {
      case Op::kSum: out = Matrix::Constant(1, 1, x.sum()); break;
      case Op::kMean: out = Matrix::Constant(1, 1, x.mean()); break;
      case Op::kRowSum: out = x.rowwise().sum(); break;
      default: throw std::logic_error("reduce: unsupported op");
    }
    return push(op, std::move(out), {a.id()});
  }

  Var gather_rows(Var table, std::span<const int> ids) {
    const Matrix& t = value(table.id());
    Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= t.rows()) {
        throw std::out_of_range("gather_rows: id " + std::to_string(ids[i]) + " out of range");
      }
      out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
    }
    Var v = push(Op::kGatherRows, std::move(out), {table.id()});
    nodes_[v.id()].ids.assign(ids.begin(), ids.end());
    return v;
  }

 private:
  struct Node {
    Op op = Op::kConstant;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> args;
    bool needs_grad = false;
    Scalar scalar_arg = Scalar(0);
    Eigen::Index int_arg = 0;
    std::vector<int> ids;
    Store* store = nullptr;
    std::size_t entry = 0;
  };

  static std::invalid_argument shape_error(std::string_view what, const Matrix& x, const Matrix& y) {
    return std::invalid_argument(std::string(what) + ": shape mismatch [" + std::to_string(x.rows()) +
                                 "x" + std::to_string(x.cols()) + "] vs [" +
                                 std::to_string(y.rows()) + "x" + std::to_string(y.cols()) + "]");
  }

  static bool broadcastable(const Matrix& x, Eigen::Index rows, Eigen::Index cols) {
    return (x.rows() == rows || x.rows() == 1) && (x.cols() == cols || x.cols() == 1);
  }

  static Matrix expand(const Matrix& x, Eigen::Index rows, Eigen::Index cols) {
    if (x.rows() == rows && x.cols() == cols) return x;
    return x.replicate(rows / x.rows(), cols / x.cols());
  }

  // Sums a broadcast gradient back down to the operand's shape.
  static Matrix reduce_to(const Matrix& g, const Matrix& like) {
    if (g.rows() == like.rows() && g.cols() == like.cols()) return g;
    Matrix r = g;
    if (like.rows() == 1 && r.rows() != 1) r = r.colwise().sum().eval();
    if (like.cols() == 1 && r.cols() != 1) r = r.rowwise().sum().eval();
    return r;
  }

  Var push(Op op, Matrix value, std::vector<std::size_t> args, bool leaf_needs_grad = false) {
    if (!value.allFinite()) {
      throw NonFiniteError("non-finite value produced by " + std::string(op_name(op)));
    }
    Node n;
    n.op = op;
    n.value = std::move(value);
    n.needs_grad = leaf_needs_grad;
    for (std::size_t a : args) n.needs_grad = n.needs_grad || nodes_[a].needs_grad;
    n.args = std::move(args);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  void accumulate(std::size_t id, const Matrix& g) {
    Node& n = nodes_[id];
    if (n.needs_grad) n.grad += g;
  }

  void pull(std::size_t i) {
    const Node& n = nodes_[i];
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
      case Op::kParameter:
        return;
      case Op::kMatMul: {
        const Matrix& a = nodes_[n.args[0]].value;
        const Matrix& b = nodes_[n.args[1]].value;
        if (nodes_[n.args[0]].needs_grad) accumulate(n.args[0], g * b.transpose());
        if (nodes_[n.args[1]].needs_grad) accumulate(n.args[1], a.transpose() * g);
        return;
      }
      case Op::kAdd:
      case Op::kSub: {
        const Matrix& a = nodes_[n.args[0]].value;
        const Matrix& b = nodes_[n.args[1]].value;
        if (nodes_[n.args[0]].needs_grad) accumulate(n.args[0], reduce_to(g, a));
        if (nodes_[n.args[1]].needs_grad) {
          const Matrix gb = reduce_to(g, b);
          accumulate(n.args[1], n.op == Op::kAdd ? gb : Matrix(-gb));
        }
        return;
      }
      case Op::kMul: {
        const Matrix& a = nodes_[n.args[0]].value;
        const Matrix& b = nodes_[n.args[1]].value;
        const Matrix ae = expand(a, g.rows(), g.cols());
        const Matrix be = expand(b, g.rows(), g.cols());
        if (nodes_[n.args[0]].needs_grad) accumulate(n.args[0], reduce_to(g.cwiseProduct(be), a));
        if (nodes_[n.args[1]].needs_grad) accumulate(n.args[1], reduce_to(g.cwiseProduct(ae), b));
        return;
      }
      case Op::kMinimum: {
        const Matrix& a = nodes_[n.args[0]].value;
        const Matrix& b = nodes_[n.args[1]].value;
        const Matrix ae = expand(a, g.rows(), g.cols());
        const Matrix be = expand(b, g.rows(), g.cols());
        const Matrix pick_a = (ae.array() <= be.array()).template cast<Scalar>().matrix();
        if (nodes_[n.args[0]].needs_grad) accumulate(n.args[0], reduce_to(g.cwiseProduct(pick_a), a));
        if (nodes_[n.args[1]].needs_grad) {
          const Matrix pick_b = (Matrix::Ones(g.rows(), g.cols()) - pick_a);
          accumulate(n.args[1], reduce_to(g.cwiseProduct(pick_b), b));
        }
        return;
      }
      case Op::kScale:
        accumulate(n.args[0], g * n.scalar_arg);
        return;
      case Op::kAddScalar:
        accumulate(n.args[0], g);
        return;
      case Op::kTanh:
        accumulate(n.args[0], (g.array() * (Scalar(1) - n.value.array().square())).matrix());
        return;
      case Op::kLogistic:
        accumulate(n.args[0], (g.array() * n.value.array() * (Scalar(1) - n.value.array())).matrix());
        return;
      case Op::kRelu: {
        const auto& x = nodes_[n.args[0]].value.array();
        accumulate(n.args[0], (g.array() * (x > Scalar(0)).template cast<Scalar>()).matrix());
        return;
      }
      case Op::kSoftplus: {
        const auto& x = nodes_[n.args[0]].value.array();
        accumulate(n.args[0], (g.array() / (Scalar(1) + (-x).exp())).matrix());
        return;
      }
      case Op::kExp:
        accumulate(n.args[0], g.cwiseProduct(n.value));
        return;
      case Op::kLog:
        accumulate(n.args[0], (g.array() / nodes_[n.args[0]].value.array()).matrix());
        return;
      case Op::kSquare:
        accumulate(n.args[0], (Scalar(2) * g.array() * nodes_[n.args[0]].value.array()).matrix());
        return;
      case Op::kTranspose:
        accumulate(n.args[0], g.transpose());
        return;
      case Op::kLogSoftmax: {
        const Matrix p = n.value.array().exp().matrix();
        const Matrix rowsum = g.rowwise().sum();
        accumulate(n.args[0], g - (p.array().colwise() * rowsum.col(0).array()).matrix());
        return;
      }
      case Op::kConcat: {
        Eigen::Index offset = 0;
        for (std::size_t a : n.args) {
          const Eigen::Index c = nodes_[a].value.cols();
          if (nodes_[a].needs_grad) accumulate(a, g.middleCols(offset, c));
          offset += c;
        }
        return;
      }
      case Op::kSlice: {
        Node& src = nodes_[n.args[0]];
        if (src.needs_grad) src.grad.middleCols(n.int_arg, g.cols()) += g;
        return;
      }
      case Op::kSum: {
        const Matrix& x = nodes_[n.args[0]].value;
        accumulate(n.args[0], Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
        return;
      }
      case Op::kMean: {
        const Matrix& x = nodes_[n.args[0]].value;
        accumulate(n.args[0],
                   Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<Scalar>(x.size())));
        return;
      }
      case Op::kRowSum: {
        const Matrix& x = nodes_[n.args[0]].value;
        accumulate(n.args[0], g.col(0).replicate(1, x.cols()));
        return;
      }
      case Op::kGatherRows: {
        Node& src = nodes_[n.args[0]];
        if (!src.needs_grad) return;
        for (std::size_t r = 0; r < n.ids.size(); ++r) {
          src.grad.row(n.ids[r]) += g.row(static_cast<Eigen::Index>(r));
        }
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::map<std::tuple<const void*, std::size_t, bool>, std::size_t> bound_;
};

// ---- expression-style free functions -----------------------------------

template <typename S>
BasicVar<S> matmul(BasicVar<S> a, BasicVar<S> b) { return a.tape()->matmul(a, b); }

template <typename S>
BasicVar<S> operator+(BasicVar<S> a, BasicVar<S> b) { return a.tape()->binary(Op::kAdd, a, b); }

template <typename S>
BasicVar<S> operator-(BasicVar<S> a, BasicVar<S> b) { return a.tape()->binary(Op::kSub, a, b); }

/// Elementwise (Hadamard) product with broadcasting.
template <typename S>
BasicVar<S> cwise_product(BasicVar<S> a, BasicVar<S> b) { return a.tape()->binary(Op::kMul, a, b); }

template <typename S>
BasicVar<S> cwise_min(BasicVar<S> a, BasicVar<S> b) { return a.tape()->binary(Op::kMinimum, a, b); }

template <typename S>
BasicVar<S> operator*(BasicVar<S> a, S s) { return a.tape()->scale(a, s); }

template <typename S>
BasicVar<S> operator*(S s, BasicVar<S> a) { return a.tape()->scale(a, s); }

template <typename S>
BasicVar<S> operator-(BasicVar<S> a) { return a.tape()->scale(a, S(-1)); }

template <typename S>
BasicVar<S> operator+(BasicVar<S> a, S s) { return a.tape()->add_scalar(a, s); }

template <typename S>
BasicVar<S> operator+(S s, BasicVar<S> a) { return a.tape()->add_scalar(a, s); }

template <typename S>
BasicVar<S> operator-(BasicVar<S> a, S s) { return a.tape()->add_scalar(a, -s); }

template <typename S>
BasicVar<S> operator-(S s, BasicVar<S> a) { return a.tape()->add_scalar(a.tape()->scale(a, S(-1)), s); }

template <typename S>
BasicVar<S> tanh(BasicVar<S> a) { return a.tape()->unary(Op::kTanh, a); }

template <typename S>
BasicVar<S> logistic(BasicVar<S> a) { return a.tape()->unary(Op::kLogistic, a); }

template <typename S>
BasicVar<S> relu(BasicVar<S> a) { return a.tape()->unary(Op::kRelu, a); }

/// log(1 + exp(x)), computed without overflow.
template <typename S>
BasicVar<S> softplus(BasicVar<S> a) { return a.tape()->unary(Op::kSoftplus, a); }

template <typename S>
BasicVar<S> exp(BasicVar<S> a) { return a.tape()->unary(Op::kExp, a); }

template <typename S>
BasicVar<S> log(BasicVar<S> a) { return a.tape()->unary(Op::kLog, a); }

template <typename S>
BasicVar<S> square(BasicVar<S> a) { return a.tape()->unary(Op::kSquare, a); }

template <typename S>
BasicVar<S> transpose(BasicVar<S> a) { return a.tape()->unary(Op::kTranspose, a); }

/// Row-wise log of softmax.
template <typename S>
BasicVar<S> log_softmax(BasicVar<S> a) { return a.tape()->log_softmax(a); }

template <typename S>
BasicVar<S> concat_cols(std::span<const BasicVar<S>> parts) {
  return parts.front().tape()->concat_cols(parts);
}

template <typename S>
BasicVar<S> concat_cols(std::initializer_list<BasicVar<S>> parts) {
  return concat_cols(std::span<const BasicVar<S>>(parts.begin(), parts.size()));
}

template <typename S>
BasicVar<S> slice_cols(BasicVar<S> a, Eigen::Index start, Eigen::Index count) {
  return a.tape()->slice_cols(a, start, count);
}

template <typename S>
BasicVar<S> sum(BasicVar<S> a) { return a.tape()->reduce(Op::kSum, a); }

template <typename S>
BasicVar<S> mean(BasicVar<S> a) { return a.tape()->reduce(Op::kMean, a); }

template <typename S>
BasicVar<S> row_sum(BasicVar<S> a) { return a.tape()->reduce(Op::kRowSum, a); }

template <typename S>
BasicVar<S> gather_rows(BasicVar<S> table, std::span<const int> ids) {
  return table.tape()->gather_rows(table, ids);
}

/// Copies the value into a fresh constant node: no gradient flows back.
template <typename S>
BasicVar<S> stop_gradient(BasicVar<S> a) { return a.tape()->constant(a.value()); }

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

}  // namespace gems::ad
