#pragma once

#include "gsb/nn/tape.hpp"

#include <span>

namespace gsb::nn {

/// Cross-correlation of x[B,Cin,H,W] with w[Cout,Cin,kh,kw] plus b[Cout],
/// zero padding `pad` on both spatial axes. Output spatial size is
/// floor((H + 2 pad - kh) / stride) + 1.
Var conv2d(Var x, Var w, Var b, std::size_t stride = 1, std::size_t pad = 0);

/// Windowed maximum over x[B,C,H,W]. Backward routes each window's gradient
/// to the first maximal element in row-major order.
Var maxpool2d(Var x, std::size_t k = 2, std::size_t stride = 2);

/// y[B,m] = x[B,n] w[m,n]^T + b[m].
Var dense(Var x, Var w, Var b);

Var relu(Var x);
Var sigmoid(Var x);
/// Softmax over the last axis of a rank-2 tensor, max-subtracted.
Var softmax(Var x);

/// Mean over the two spatial axes: [B,C,H,W] -> [B,C].
Var global_avg_pool(Var x);
/// Maximum over the height (time) axis only, flattened: [B,C,H,W] -> [B,C*W].
/// Backward routes to the first maximum.
Var time_max_pool(Var x);
Var reshape(Var x, Shape shape);
Var add(Var a, Var b);
Var scale(Var x, double factor);
Var sum(Var x);
Var mean(Var x);

inline constexpr double kProbClamp = 1e-7;

/// sum_i w_i * -[y_i log p_i + (1 - y_i) log(1 - p_i)], p clamped to
/// [1e-7, 1 - 1e-7]. `p` holds one probability per example.
Var bce(Var p, std::span<const double> targets, std::span<const double> weights);

/// sum_i w_i * (logsumexp(z_i) - z_i[c_i]) over logits z[B,K]. Rows with
/// weight zero contribute neither loss nor gradient.
Var cross_entropy_logits(Var logits, std::span<const int> classes, std::span<const double> weights);

// Scalar forms used by the reference examples.
double bce_value(double p, double y);
double cross_entropy_value(std::span<const double> logits, int cls);

}  // namespace gsb::nn
