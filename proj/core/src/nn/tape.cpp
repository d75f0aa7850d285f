#include "gsb/nn/tape.hpp"

#include "gsb/error.hpp"

namespace gsb::nn {

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  require(value.all_finite(), ErrorCode::NonFiniteValue, "constant contains NaN/Inf");
  return push({std::move(value), {}, false, nullptr, {}});
}

Var Tape::input(Tensor value) {
  require(value.all_finite(), ErrorCode::NonFiniteValue, "input contains NaN/Inf");
  return push({std::move(value), {}, true, nullptr, {}});
}

Var Tape::param(Parameter& param) {
  require(param.value.all_finite(), ErrorCode::NonFiniteValue, "parameter " + param.name + " contains NaN/Inf");
  return push({param.value, {}, true, &param, {}});
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  require(!consumed_, ErrorCode::TapeConsumed, "cannot record on a tape after backward()");
  require(value.all_finite(), ErrorCode::NonFiniteValue, "op produced NaN/Inf");
  bool needs = false;
  for (auto p : parents) needs = needs || nodes_.at(p).requires_grad;
  return push({std::move(value), {}, needs, nullptr, needs ? std::move(backward) : BackwardFn{}});
}

Tensor& Tape::grad_buffer(std::size_t id) {
  auto& n = nodes_.at(id);
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor& Tape::grad(std::size_t id) { return grad_buffer(id); }

void Tape::backward(Var loss) {
  require(loss.tape == this, ErrorCode::InvalidParam, "loss belongs to another tape");
  require(!consumed_, ErrorCode::TapeConsumed, "backward() already ran on this tape; reset() it first");
  require(nodes_.at(loss.id).value.size() == 1, ErrorCode::ShapeMismatch, "backward() needs a scalar loss");
  consumed_ = true;
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      auto& pg = n.param->grad;
      if (pg.shape() != n.param->value.shape()) pg = Tensor(n.param->value.shape());
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  consumed_ = false;
}

}  // namespace gsb::nn
