#include "gsb/nn/optim.hpp"

#include "gsb/error.hpp"

namespace gsb::nn {

void sgd_step(std::vector<Parameter*>& params, OptimizerState& state, const SgdConfig& cfg) {
  require(cfg.learning_rate > 0.0, ErrorCode::InvalidParam, "learning rate must be positive");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, ErrorCode::InvalidParam, "momentum must be in [0, 1)");
  for (auto* p : params)
    require(p->grad.all_finite(), ErrorCode::NonFiniteValue, "gradient of " + p->name + " contains NaN/Inf");
  if (state.velocity.size() != params.size()) {
    state.velocity.clear();
    for (auto* p : params) state.velocity.emplace_back(p->value.shape());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& v = state.velocity[i];
    require(p.grad.size() == p.value.size() && v.size() == p.value.size(), ErrorCode::ShapeMismatch,
            "optimizer state does not match parameter " + p.name);
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      v[k] = cfg.momentum * v[k] - cfg.learning_rate * p.grad[k];
      p.value[k] += v[k];
    }
  }
}

void zero_grads(std::vector<Parameter*>& params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace gsb::nn
