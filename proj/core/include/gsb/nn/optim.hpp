#pragma once

#include "gsb/nn/tape.hpp"

#include <vector>

namespace gsb::nn {

struct SgdConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
};

/// Per-parameter velocity buffers, index-aligned with the parameter list.
struct OptimizerState {
  std::vector<Tensor> velocity;
};

/// v <- momentum * v - lr * g; p <- p + v. Throws NonFiniteValue if any
/// gradient is NaN/Inf, leaving parameters untouched.
void sgd_step(std::vector<Parameter*>& params, OptimizerState& state, const SgdConfig& cfg);

void zero_grads(std::vector<Parameter*>& params);

}  // namespace gsb::nn
