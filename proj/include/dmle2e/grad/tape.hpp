#ifndef DMLE2E_GRAD_TAPE_HPP
#define DMLE2E_GRAD_TAPE_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::grad {

template <typename Scalar>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid until the tape is reset.
template <typename Scalar>
class Var {
 public:
  Var() = default;

  const MatrixX<Scalar>& value() const {
    tape_->check_live(*this);
    return tape_->value(id_);
  }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const {
    if (rows() != 1 || cols() != 1) throw InvalidArgument("Var::scalar on a non-scalar node");
    return value()(0, 0);
  }
  std::size_t id() const { return id_; }
  Tape<Scalar>* tape() const { return tape_; }
  std::uint64_t generation() const { return generation_; }

 private:
  friend class Tape<Scalar>;
  Var(Tape<Scalar>* tape, std::size_t id, std::uint64_t generation)
      : tape_(tape), id_(id), generation_(generation) {}

  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t generation_ = 0;
};

/// Gradients of a scalar loss with respect to every registered parameter.
template <typename Scalar>
class Gradients {
 public:
  const MatrixX<Scalar>& operator[](std::string_view name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw InvalidArgument("no gradient for parameter '" + std::string(name) + "'");
    return it->second;
  }
  const MatrixX<Scalar>& operator[](const Var<Scalar>& param) const { return (*this)[param.tape()->param_name(param)]; }
  bool contains(std::string_view name) const { return by_name_.find(name) != by_name_.end(); }
  const std::vector<std::string>& names() const { return order_; }

  void insert(std::string name, MatrixX<Scalar> g) {
    order_.push_back(name);
    by_name_.emplace(std::move(name), std::move(g));
  }

 private:
  std::map<std::string, MatrixX<Scalar>, std::less<>> by_name_;
  std::vector<std::string> order_;
};

/// Append-only record of a forward computation. Each node caches its value and a
/// closure that pushes its output gradient into its parents (vector-Jacobian product).
/// Parents always precede children, so a reverse sweep over ids is a valid topological order.
template <typename Scalar>
class Tape {
 public:
  using Matrix = MatrixX<Scalar>;
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Matrix value) { return push(std::move(value), {}, "const", nullptr, false); }
  Var<Scalar> constant(Scalar value) { return constant(Matrix::Constant(1, 1, value)); }

  /// Registers a trainable leaf. Names are unique per recording.
  Var<Scalar> parameter(std::string name, Matrix value) {
    if (param_index_.contains(name)) throw InvalidArgument("parameter '" + name + "' registered twice");
    Var<Scalar> v = push(std::move(value), {}, "param", nullptr, true);
    nodes_.back().param_name = name;
    param_index_.emplace(std::move(name), v.id_);
    params_.push_back(v.id_);
    return v;
  }

  Var<Scalar> record(Matrix value, std::initializer_list<Var<Scalar>> parents, std::string_view op, BackwardFn fn) {
    return record(std::move(value), std::vector<Var<Scalar>>(parents), op, std::move(fn));
  }

  Var<Scalar> record(Matrix value, const std::vector<Var<Scalar>>& parents, std::string_view op, BackwardFn fn) {
    std::vector<std::size_t> ids;
    ids.reserve(parents.size());
    bool needs = false;
    for (const auto& p : parents) {
      check_live(p);
      ids.push_back(p.id_);
      needs = needs || nodes_[p.id_].requires_grad;
    }
    return push(std::move(value), std::move(ids), op, needs ? std::move(fn) : nullptr, needs);
  }

  /// Reverse sweep from a scalar node. One backward per recording.
  Gradients<Scalar> backward(const Var<Scalar>& loss) {
    check_live(loss);
    if (backward_done_) throw UsageError("backward already ran on this recording; reset and record again");
    const Node& ln = nodes_[loss.id_];
    if (ln.value.rows() != 1 || ln.value.cols() != 1) throw InvalidArgument("backward: loss must be a 1x1 node");
    backward_done_ = true;

    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.id_].grad = Matrix::Ones(1, 1);
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (!n.grad.allFinite()) {
        throw NumericError("non-finite gradient at node " + std::to_string(i) + " (" + n.op + ")");
      }
      if (!n.backward) continue;
      n.backward(*this, i);
      for (std::size_t p : n.parents) {
        if (nodes_[p].grad.size() && !nodes_[p].grad.allFinite()) {
          throw NumericError("non-finite gradient produced by node " + std::to_string(i) + " (" + n.op + ")");
        }
      }
    }

    Gradients<Scalar> out;
    for (std::size_t id : params_) {
      const Node& n = nodes_[id];
      out.insert(n.param_name, n.grad.size() ? n.grad : Matrix::Zero(n.value.rows(), n.value.cols()));
    }
    return out;
  }

  /// Discards all nodes. Vars from earlier recordings become unusable.
  void reset() {
    nodes_.clear();
    params_.clear();
    param_index_.clear();
    backward_done_ = false;
    ++generation_;
  }

  std::size_t size() const { return nodes_.size(); }

  /// One line per node: id, op, shape, parents.
  std::string dump() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      os << i << ' ' << n.op;
      if (!n.param_name.empty()) os << '[' << n.param_name << ']';
      os << ' ' << n.value.rows() << 'x' << n.value.cols() << " <-";
      for (std::size_t p : n.parents) os << ' ' << p;
      os << '\n';
    }
    return os.str();
  }

  // Accessors used by backward closures.
  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t parent(std::size_t id, std::size_t k) const { return nodes_[id].parents[k]; }

  /// Adds `g` into the gradient of node `id`, summing over broadcast dimensions.
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    const Eigen::Index r = n.value.rows(), c = n.value.cols();
    if (n.grad.size() == 0) n.grad = Matrix::Zero(r, c);
    if (g.rows() == r && g.cols() == c) {
      n.grad += g;
    } else if (r == 1 && c == 1) {
      n.grad(0, 0) += g.sum();
    } else if (r == 1 && c == g.cols()) {
      n.grad += g.colwise().sum();
    } else if (c == 1 && r == g.rows()) {
      n.grad += g.rowwise().sum();
    } else {
      throw InvalidArgument("gradient shape does not reduce onto node " + std::to_string(id) + " (" + n.op + ")");
    }
  }

  const std::string& param_name(const Var<Scalar>& v) const {
    check_live(v);
    const Node& n = nodes_[v.id_];
    if (n.param_name.empty()) throw InvalidArgument("node is not a registered parameter");
    return n.param_name;
  }

  void check_live(const Var<Scalar>& v) const {
    if (v.tape_ != this) throw UsageError("Var belongs to a different tape");
    if (v.generation_ != generation_ || v.id_ >= nodes_.size()) {
      throw UsageError("Var refers to a reset tape; record the forward pass again");
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    std::string op;
    std::string param_name;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var<Scalar> push(Matrix value, std::vector<std::size_t> parents, std::string_view op, BackwardFn fn, bool needs) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(parents), std::string(op), {}, std::move(fn), needs});
    backward_done_ = false;
    return Var<Scalar>(this, nodes_.size() - 1, generation_);
  }

  std::vector<Node> nodes_;
  std::vector<std::size_t> params_;
  std::map<std::string, std::size_t, std::less<>> param_index_;
  std::uint64_t generation_ = 1;
  bool backward_done_ = false;
};

}  // namespace dmle2e::grad

#endif  // DMLE2E_GRAD_TAPE_HPP
