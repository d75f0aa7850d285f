#pragma once

// Central-difference gradient checks for tape ops. Shared by the unit suite
// and the acceptance runner.

#include "gsb/nn/ops.hpp"
#include "gsb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace gradcheck {

using gsb::nn::Shape;
using gsb::nn::Tape;
using gsb::nn::Tensor;
using gsb::nn::Var;

using OpFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline Tensor random_tensor(const Shape& shape, gsb::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero, so relu kinks sit outside the FD stencil.
inline Tensor away_from_zero(const Shape& shape, gsb::Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) v = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.05, 1.0);
  return t;
}

// Distinct values on a 0.01 grid, shuffled, so window maxima are unique and
// separated by more than twice the step.
inline Tensor distinct(const Shape& shape, gsb::Rng& rng) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.01 * static_cast<double>(i) - 0.005 * static_cast<double>(t.size());
  std::vector<double> v(t.data().begin(), t.data().end());
  rng.shuffle(std::span(v));
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

struct Result {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Projects the op output onto a fixed random direction so every output
// element influences the scalar being differentiated.
inline double project(const Tensor& y, const std::vector<double>& dir) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * dir[i];
  return s;
}

inline Var projected_loss(Tape& tape, Var y, const std::vector<double>& dir) {
  const std::size_t n = y.value().size();
  Var flat = gsb::nn::reshape(y, {1, n});
  Var w = tape.constant(Tensor({1, n}, dir));
  Var b = tape.constant(Tensor({1}, 0.0));
  return gsb::nn::sum(gsb::nn::dense(flat, w, b));
}

// Relative error |a - n| / max(|a|, |n|, 1) per coordinate, maximised over
// every element of every input.
inline Result check(const OpFn& op, const std::vector<Tensor>& inputs, gsb::Rng& rng, double step = 1e-3) {
  std::vector<double> dir;
  {
    Tape probe;
    std::vector<Var> vars;
    for (const auto& x : inputs) vars.push_back(probe.constant(x));
    const auto n = op(probe, vars).value().size();
    for (std::size_t i = 0; i < n; ++i) dir.push_back(rng.uniform(-1.0, 1.0));
  }

  Tape tape;
  std::vector<Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.input(x));
  Var y = op(tape, vars);
  tape.backward(projected_loss(tape, y, dir));

  auto eval = [&](const std::vector<Tensor>& xs) {
    Tape t;
    std::vector<Var> vs;
    for (const auto& x : xs) vs.push_back(t.constant(x));
    return project(op(t, vs).value(), dir);
  };

  Result r;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = tape.grad(vars[k].id);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[k][i] += step;
      minus[k][i] -= step;
      const double numeric = (eval(plus) - eval(minus)) / (2 * step);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1.0});
      r.max_rel_error = std::max(r.max_rel_error, err);
      ++r.checked;
    }
  }
  return r;
}

struct OpCase {
  std::string name;
  OpFn op;
  std::vector<Tensor> inputs;
};

// Twenty random configurations of every differentiable op.
inline std::vector<OpCase> standard_cases(std::uint64_t seed, int per_op = 20) {
  namespace nn = gsb::nn;
  gsb::Rng rng(seed);
  auto dim = [&](int lo, int hi) { return static_cast<std::size_t>(rng.uniform_int(lo, hi)); };
  std::vector<OpCase> cases;
  for (int i = 0; i < per_op; ++i) {
    {
      const std::size_t b = dim(1, 2), cin = dim(1, 3), cout = dim(1, 3), k = dim(1, 3);
      const std::size_t stride = dim(1, 2), pad = dim(0, 1);
      const std::size_t h = k + dim(0, 4), w = k + dim(0, 4);
      cases.push_back({"conv2d",
                       [stride, pad](Tape&, const std::vector<Var>& v) { return nn::conv2d(v[0], v[1], v[2], stride, pad); },
                       {random_tensor({b, cin, h, w}, rng), random_tensor({cout, cin, k, k}, rng),
                        random_tensor({cout}, rng)}});
    }
    {
      const std::size_t k = dim(1, 3), s = dim(1, 3);
      const Shape shape{dim(1, 2), dim(1, 3), k + dim(0, 5), k + dim(0, 5)};
      cases.push_back({"maxpool2d", [k, s](Tape&, const std::vector<Var>& v) { return nn::maxpool2d(v[0], k, s); },
                       {distinct(shape, rng)}});
    }
    {
      const std::size_t b = dim(1, 4), n = dim(1, 6), m = dim(1, 6);
      cases.push_back({"dense", [](Tape&, const std::vector<Var>& v) { return nn::dense(v[0], v[1], v[2]); },
                       {random_tensor({b, n}, rng), random_tensor({m, n}, rng), random_tensor({m}, rng)}});
    }
    const Shape any{dim(1, 3), dim(1, 3), dim(1, 4), dim(1, 4)};
    cases.push_back({"relu", [](Tape&, const std::vector<Var>& v) { return nn::relu(v[0]); }, {away_from_zero(any, rng)}});
    cases.push_back(
        {"sigmoid", [](Tape&, const std::vector<Var>& v) { return nn::sigmoid(v[0]); }, {random_tensor(any, rng, -4, 4)}});
    cases.push_back({"softmax", [](Tape&, const std::vector<Var>& v) { return nn::softmax(v[0]); },
                     {random_tensor({dim(1, 4), dim(2, 6)}, rng, -3, 3)}});
    cases.push_back(
        {"global_avg_pool", [](Tape&, const std::vector<Var>& v) { return nn::global_avg_pool(v[0]); }, {random_tensor(any, rng)}});
    cases.push_back(
        {"time_max_pool", [](Tape&, const std::vector<Var>& v) { return nn::time_max_pool(v[0]); }, {distinct(any, rng)}});
    {
      const std::size_t a = dim(1, 4), b = dim(1, 4);
      cases.push_back({"reshape", [a, b](Tape&, const std::vector<Var>& v) { return nn::reshape(v[0], {b, a}); },
                       {random_tensor({a, b}, rng)}});
    }
    cases.push_back({"add", [](Tape&, const std::vector<Var>& v) { return nn::add(v[0], v[1]); },
                     {random_tensor(any, rng), random_tensor(any, rng)}});
    {
      const double f = rng.uniform(-2, 2);
      cases.push_back({"scale", [f](Tape&, const std::vector<Var>& v) { return nn::scale(v[0], f); }, {random_tensor(any, rng)}});
    }
    cases.push_back({"sum", [](Tape&, const std::vector<Var>& v) { return nn::sum(v[0]); }, {random_tensor(any, rng)}});
    cases.push_back({"mean", [](Tape&, const std::vector<Var>& v) { return nn::mean(v[0]); }, {random_tensor(any, rng)}});
    {
      const std::size_t b = dim(1, 6);
      std::vector<double> y(b), w(b);
      for (std::size_t j = 0; j < b; ++j) {
        y[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        w[j] = rng.uniform(0.0, 2.0);
      }
      cases.push_back({"bce", [y, w](Tape&, const std::vector<Var>& v) { return nn::bce(v[0], y, w); },
                       {random_tensor({b}, rng, 0.1, 0.9)}});
    }
    {
      const std::size_t b = dim(1, 5), k = dim(2, 6);
      std::vector<int> cls(b);
      std::vector<double> w(b);
      for (std::size_t j = 0; j < b; ++j) {
        cls[j] = rng.uniform_int(0, static_cast<int>(k) - 1);
        w[j] = rng.bernoulli(0.2) ? 0.0 : rng.uniform(0.1, 2.0);
      }
      cases.push_back({"cross_entropy_logits",
                       [cls, w](Tape&, const std::vector<Var>& v) { return nn::cross_entropy_logits(v[0], cls, w); },
                       {random_tensor({b, k}, rng, -3, 3)}});
    }
    {
      // dense -> relu -> dense chain. Positive inputs and weights with biases
      // either well above or well below zero keep every unit off the kink.
      const std::size_t b = dim(1, 3), n = dim(2, 5), h = dim(2, 5);
      Tensor bias({h});
      for (auto& v : bias.data()) v = rng.bernoulli(0.5) ? rng.uniform(0.5, 1.0) : rng.uniform(-7.0, -6.0);
      cases.push_back({"dense_relu_chain",
                       [](Tape&, const std::vector<Var>& v) {
                         return nn::dense(nn::relu(nn::dense(v[0], v[1], v[2])), v[3], v[4]);
                       },
                       {random_tensor({b, n}, rng, 0.0, 1.0), random_tensor({h, n}, rng, 0.0, 1.0), bias,
                        random_tensor({2, h}, rng), random_tensor({2}, rng)}});
    }
  }
  return cases;
}

}  // namespace gradcheck
