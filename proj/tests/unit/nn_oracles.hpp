#pragma once
// Plain-loop references for the tensor ops.

#include "gsb/nn/tensor.hpp"

namespace oracle {

// Direct six-loop cross-correlation.
inline gsb::nn::Tensor naive_conv(const gsb::nn::Tensor& x, const gsb::nn::Tensor& w, const gsb::nn::Tensor& b,
                                  std::size_t stride, std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = (H + 2 * pad - kh) / stride + 1, ow = (W + 2 * pad - kw) / stride + 1;
  gsb::nn::Tensor y({B, O, oh, ow});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double s = b[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const auto r = static_cast<long>(i * stride + u) - static_cast<long>(pad);
                const auto q = static_cast<long>(j * stride + v) - static_cast<long>(pad);
                if (r < 0 || q < 0 || r >= long(H) || q >= long(W)) continue;
                s += x[((n * C + c) * H + std::size_t(r)) * W + std::size_t(q)] * w[((o * C + c) * kh + u) * kw + v];
              }
          y[((n * O + o) * oh + i) * ow + j] = s;
        }
  return y;
}

// y[i,j] = b[j] + sum_k x[i,k] w[j,k].
inline gsb::nn::Tensor naive_dense(const gsb::nn::Tensor& x, const gsb::nn::Tensor& w, const gsb::nn::Tensor& b) {
  const std::size_t B = x.dim(0), n = x.dim(1), m = w.dim(0);
  gsb::nn::Tensor y({B, m});
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = b[j];
      for (std::size_t k = 0; k < n; ++k) s += x[i * n + k] * w[j * n + k];
      y[i * m + j] = s;
    }
  return y;
}

}  // namespace oracle
