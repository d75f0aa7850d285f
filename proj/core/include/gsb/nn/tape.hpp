#pragma once

#include "gsb/nn/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gsb::nn {

/// Trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
};

/// Records a forward computation and replays it backwards once.
///
/// Nodes are appended in evaluation order, which is a topological order, so
/// backward() walks them in reverse and visits each exactly once. A tape is
/// single-use: a second backward() throws TapeConsumed until reset().
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is readable after backward() (gradient checks).
  Var input(Tensor value);
  /// Leaf bound to a parameter; backward() adds into param.grad.
  Var param(Parameter& param);

  /// Appends an op result. Throws NonFiniteValue if `value` has NaN/Inf.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
  void backward(Var loss);
  void reset();

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  /// Gradient of a node; zero-filled if it never received one.
  const Tensor& grad(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Mutable gradient buffer, allocated on first use.
  Tensor& grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace gsb::nn
