#include "gsb/nn/ops.hpp"

#include "gsb/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsb::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void expect(bool cond, const std::string& what) { require(cond, ErrorCode::ShapeMismatch, what); }

void accumulate(Tape& tape, std::size_t id, const Tensor& delta) {
  if (!tape.requires_grad(id)) return;
  auto& g = tape.grad_buffer(id);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

struct ConvGeometry {
  std::size_t batch, cin, h, w, cout, kh, kw, stride, pad, ho, wo;
  std::size_t patch() const { return cin * kh * kw; }
  std::size_t positions() const { return ho * wo; }
};

// col[(c*kh + i)*kw + j, oy*wo + ox] = x[c, oy*s + i - pad, ox*s + j - pad]
void im2col(const double* x, const ConvGeometry& g, double* col) {
  const auto pos = g.positions();
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* out = col + ((c * g.kh + i) * g.kw + j) * pos;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.pad);
          double* row = out + oy * g.wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill_n(row, g.wo, 0.0);
            continue;
          }
          const double* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.pad);
            row[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
}

void col2im(const double* col, const ConvGeometry& g, double* dx) {
  const auto pos = g.positions();
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* in = col + ((c * g.kh + i) * g.kw + j) * pos;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          double* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const double* row = in + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += row[ox];
          }
        }
      }
}

}  // namespace

Var conv2d(Var x, Var w, Var b, std::size_t stride, std::size_t pad) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  expect(xs.size() == 4, "conv2d input must be [B,C,H,W], got " + shape_string(xs));
  expect(ws.size() == 4, "conv2d weight must be [Cout,Cin,kh,kw], got " + shape_string(ws));
  expect(ws[1] == xs[1], "conv2d channel mismatch: input " + shape_string(xs) + " weight " + shape_string(ws));
  expect(b.shape() == Shape{ws[0]}, "conv2d bias must be [Cout]");
  expect(stride >= 1, "conv2d stride must be >= 1");
  expect(xs[2] + 2 * pad >= ws[2] && xs[3] + 2 * pad >= ws[3], "conv2d kernel larger than padded input");

  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], stride, pad, 0, 0};
  g.ho = (g.h + 2 * pad - g.kh) / stride + 1;
  g.wo = (g.w + 2 * pad - g.kw) / stride + 1;

  const std::size_t patch = g.patch(), pos = g.positions();
  std::vector<double> cols(g.batch * patch * pos);
  Tensor out({g.batch, g.cout, g.ho, g.wo});
  ConstMapMat wm(w.value().ptr(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(patch));
  Eigen::Map<const Eigen::VectorXd> bias(b.value().ptr(), static_cast<Eigen::Index>(g.cout));
  for (std::size_t n = 0; n < g.batch; ++n) {
    double* col = cols.data() + n * patch * pos;
    im2col(x.value().ptr() + n * g.cin * g.h * g.w, g, col);
    ConstMapMat cm(col, static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(pos));
    MapMat om(out.ptr() + n * g.cout * pos, static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(pos));
    om.noalias() = wm * cm;
    om.colwise() += bias;
  }

  const auto xi = x.id, wi = w.id, bi = b.id;
  return x.tape->record(std::move(out), {xi, wi, bi}, [g, xi, wi, bi, cols = std::move(cols)](Tape& t, std::size_t self) {
    const std::size_t patch = g.patch(), pos = g.positions();
    const auto& dy = t.grad_buffer(self);
    const bool need_x = t.requires_grad(xi), need_w = t.requires_grad(wi), need_b = t.requires_grad(bi);
    ConstMapMat wm(t.value(wi).ptr(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(patch));
    RowMat dw = RowMat::Zero(static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(patch));
    Eigen::VectorXd db = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.cout));
    RowMat dcol;
    for (std::size_t n = 0; n < g.batch; ++n) {
      ConstMapMat dym(dy.ptr() + n * g.cout * pos, static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(pos));
      ConstMapMat cm(cols.data() + n * patch * pos, static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(pos));
      if (need_w) dw.noalias() += dym * cm.transpose();
      // Plain loops: Eigen reductions reorder sums by buffer alignment.
      if (need_b)
        for (Eigen::Index c = 0; c < dym.rows(); ++c)
          for (Eigen::Index j = 0; j < dym.cols(); ++j) db[c] += dym(c, j);
      if (need_x) {
        dcol.noalias() = wm.transpose() * dym;
        col2im(dcol.data(), g, t.grad_buffer(xi).ptr() + n * g.cin * g.h * g.w);
      }
    }
    if (need_w) {
      auto& gw = t.grad_buffer(wi);
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += dw.data()[i];
    }
    if (need_b) {
      auto& gb = t.grad_buffer(bi);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += db[static_cast<Eigen::Index>(i)];
    }
  });
}

Var maxpool2d(Var x, std::size_t k, std::size_t stride) {
  const auto& s = x.shape();
  expect(s.size() == 4, "maxpool2d input must be [B,C,H,W], got " + shape_string(s));
  expect(k >= 1 && stride >= 1, "maxpool2d window and stride must be >= 1");
  expect(s[2] >= k && s[3] >= k, "maxpool2d window larger than input " + shape_string(s));
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  const std::size_t ho = (h - k) / stride + 1, wo = (w - k) / stride + 1;
  Tensor out({s[0], s[1], ho, wo});
  std::vector<std::size_t> argmax(out.size());
  const double* in = x.value().ptr();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = p * h * w + (oy * stride) * w + ox * stride;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const std::size_t idx = p * h * w + (oy * stride + i) * w + ox * stride + j;
            if (in[idx] > in[best]) best = idx;
          }
        const std::size_t o = (p * ho + oy) * wo + ox;
        out[o] = in[best];
        argmax[o] = best;
      }
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const auto& dy = t.grad_buffer(self);
    auto& dx = t.grad_buffer(xi);
    for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += dy[o];
  });
}

Var dense(Var x, Var w, Var b) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  expect(xs.size() == 2 && ws.size() == 2, "dense expects x[B,n] and w[m,n]");
  expect(xs[1] == ws[1], "dense input width " + std::to_string(xs[1]) + " does not match weight " + shape_string(ws));
  expect(b.shape() == Shape{ws[0]}, "dense bias must be [m]");
  const auto batch = static_cast<Eigen::Index>(xs[0]), n = static_cast<Eigen::Index>(xs[1]),
             m = static_cast<Eigen::Index>(ws[0]);
  Tensor out({xs[0], ws[0]});
  ConstMapMat xm(x.value().ptr(), batch, n);
  ConstMapMat wm(w.value().ptr(), m, n);
  MapMat om(out.ptr(), batch, m);
  om.noalias() = xm * wm.transpose();
  om.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.value().ptr(), m);

  const auto xi = x.id, wi = w.id, bi = b.id;
  return x.tape->record(std::move(out), {xi, wi, bi}, [=](Tape& t, std::size_t self) {
    ConstMapMat dy(t.grad_buffer(self).ptr(), batch, m);
    if (t.requires_grad(xi)) {
      MapMat dx(t.grad_buffer(xi).ptr(), batch, n);
      dx.noalias() += dy * ConstMapMat(t.value(wi).ptr(), m, n);
    }
    if (t.requires_grad(wi)) {
      MapMat dw(t.grad_buffer(wi).ptr(), m, n);
      dw.noalias() += dy.transpose() * ConstMapMat(t.value(xi).ptr(), batch, n);
    }
    if (t.requires_grad(bi)) {
      auto& db = t.grad_buffer(bi);
      for (Eigen::Index r = 0; r < batch; ++r)
        for (Eigen::Index c = 0; c < m; ++c) db[static_cast<std::size_t>(c)] += dy(r, c);
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi](Tape& t, std::size_t self) {
    const auto& dy = t.grad_buffer(self);
    const auto& xv = t.value(xi);
    auto& dx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (xv[i] > 0.0) dx[i] += dy[i];
  });
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi](Tape& t, std::size_t self) {
    const auto& dy = t.grad_buffer(self);
    const auto& y = t.value(self);
    auto& dx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax(Var x) {
  const auto& s = x.shape();
  expect(s.size() == 2, "softmax expects a rank-2 tensor, got " + shape_string(s));
  const std::size_t rows = s[0], k = s[1];
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* z = out.ptr() + r * k;
    const double mx = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += (z[j] = std::exp(z[j] - mx));
    for (std::size_t j = 0; j < k; ++j) z[j] /= total;
  }
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi, rows, k](Tape& t, std::size_t self) {
    const auto& dy = t.grad_buffer(self);
    const auto& y = t.value(self);
    auto& dx = t.grad_buffer(xi);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += dy[r * k + j] * y[r * k + j];
      for (std::size_t j = 0; j < k; ++j) dx[r * k + j] += y[r * k + j] * (dy[r * k + j] - dot);
    }
  });
}

Var global_avg_pool(Var x) {
  const auto& s = x.shape();
  expect(s.size() == 4, "global_avg_pool expects [B,C,H,W], got " + shape_string(s));
  const std::size_t planes = s[0] * s[1], area = s[2] * s[3];
  expect(area > 0, "global_avg_pool over an empty plane");
  Tensor out({s[0], s[1]});
  const double* in = x.value().ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < area; ++i) acc += in[p * area + i];
    out[p] = acc / static_cast<double>(area);
  }
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi, planes, area](Tape& t, std::size_t self) {
    const auto& dy = t.grad_buffer(self);
    auto& dx = t.grad_buffer(xi);
    const double inv = 1.0 / static_cast<double>(area);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t i = 0; i < area; ++i) dx[p * area + i] += dy[p] * inv;
  });
}

Var time_max_pool(Var x) {
  const auto& s = x.shape();
  expect(s.size() == 4, "time_max_pool expects [B,C,H,W], got " + shape_string(s));
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  expect(h > 0 && w > 0, "time_max_pool over an empty plane");
  Tensor out({s[0], s[1] * w});
  std::vector<std::size_t> argmax(out.size());
  const double* in = x.value().ptr();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t j = 0; j < w; ++j) {
      std::size_t best = p * h * w + j;
      for (std::size_t i = 1; i < h; ++i) {
        const std::size_t idx = (p * h + i) * w + j;
        if (in[idx] > in[best]) best = idx;
      }
      out[p * w + j] = in[best];
      argmax[p * w + j] = best;
    }
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const auto& dy = t.grad_buffer(self);
    auto& dx = t.grad_buffer(xi);
    for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += dy[o];
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi](Tape& t, std::size_t self) { accumulate(t, xi, t.grad_buffer(self)); });
}

Var add(Var a, Var b) {
  expect(a.shape() == b.shape(), "add shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const auto ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor dy = t.grad_buffer(self);
    accumulate(t, ai, dy);
    accumulate(t, bi, dy);
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= factor;
  const auto xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi, factor](Tape& t, std::size_t self) {
    const auto& dy = t.grad_buffer(self);
    auto& dx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * dy[i];
  });
}

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const auto xi = x.id;
  return x.tape->record(Tensor::scalar(acc), {xi}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0];
    auto& dx = t.grad_buffer(xi);
    for (auto& v : dx.data()) v += g;
  });
}

Var mean(Var x) {
  expect(x.value().size() > 0, "mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

double bce_value(double p, double y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

double cross_entropy_value(std::span<const double> logits, int cls) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - mx);
  return mx + std::log(total) - logits[static_cast<std::size_t>(cls)];
}

Var bce(Var p, std::span<const double> targets, std::span<const double> weights) {
  const std::size_t n = p.value().size();
  expect(targets.size() == n && weights.size() == n, "bce needs one target and weight per probability");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += weights[i] * bce_value(p.value()[i], targets[i]);
  const auto pi = p.id;
  std::vector<double> y(targets.begin(), targets.end()), wts(weights.begin(), weights.end());
  return p.tape->record(Tensor::scalar(acc), {pi}, [pi, y = std::move(y), wts = std::move(wts)](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0];
    const auto& pv = t.value(pi);
    auto& dp = t.grad_buffer(pi);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      const double q = pv[i];
      // Zero gradient where the clamp is active.
      if (q <= kProbClamp || q >= 1.0 - kProbClamp) continue;
      dp[i] += g * wts[i] * (-(y[i] / q) + (1.0 - y[i]) / (1.0 - q));
    }
  });
}

Var cross_entropy_logits(Var logits, std::span<const int> classes, std::span<const double> weights) {
  const auto& s = logits.shape();
  expect(s.size() == 2, "cross_entropy_logits expects [B,K] logits");
  const std::size_t rows = s[0], k = s[1];
  expect(classes.size() == rows && weights.size() == rows, "cross_entropy_logits needs one class and weight per row");
  Tensor probs({rows, k});
  double acc = 0.0;
  const double* z = logits.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z + r * k;
    const double mx = *std::max_element(zr, zr + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += (probs[r * k + j] = std::exp(zr[j] - mx));
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] /= total;
    if (weights[r] == 0.0) continue;
    const auto c = static_cast<std::size_t>(classes[r]);
    expect(c < k, "class index out of range");
    acc += weights[r] * (mx + std::log(total) - zr[c]);
  }
  const auto li = logits.id;
  std::vector<int> cls(classes.begin(), classes.end());
  std::vector<double> wts(weights.begin(), weights.end());
  return logits.tape->record(
      Tensor::scalar(acc), {li},
      [li, rows, k, probs = std::move(probs), cls = std::move(cls), wts = std::move(wts)](Tape& t, std::size_t self) {
        const double g = t.grad_buffer(self)[0];
        auto& dz = t.grad_buffer(li);
        for (std::size_t r = 0; r < rows; ++r) {
          if (wts[r] == 0.0) continue;
          for (std::size_t j = 0; j < k; ++j) {
            const double target = static_cast<std::size_t>(cls[r]) == j ? 1.0 : 0.0;
            dz[r * k + j] += g * wts[r] * (probs[r * k + j] - target);
          }
        }
      });
}

}  // namespace gsb::nn
