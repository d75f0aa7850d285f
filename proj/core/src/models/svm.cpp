#include "gsb/models/svm.hpp"

#include "gsb/error.hpp"
#include "gsb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gsb::models {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Standardizer Standardizer::fit(const Matrix<double>& x) {
  require(x.rows() > 0, ErrorCode::InsufficientData, "cannot standardise zero rows");
  Standardizer s;
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
  for (auto& m : s.mean) m /= static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) s.scale[c] += (x(r, c) - s.mean[c]) * (x(r, c) - s.mean[c]);
  for (auto& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(x.rows()));
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  require(x.size() == mean.size(), ErrorCode::DimensionMismatch,
          "feature has " + std::to_string(x.size()) + " dims, model expects " + std::to_string(mean.size()));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / scale[i];
  return out;
}

Matrix<double> Standardizer::apply(const Matrix<double>& x) const {
  Matrix<double> out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto z = apply(x.row(r));
    std::copy(z.begin(), z.end(), out.row(r).begin());
  }
  return out;
}

double LinearMachine::score(std::span<const double> x) const { return dot(w, x) + b; }

double hinge_objective(const LinearMachine& m, const Matrix<double>& x, std::span<const int> y, double C) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) loss += std::max(0.0, 1.0 - y[i] * m.score(x.row(i)));
  return 0.5 * dot(m.w, m.w) + C * loss;
}

BinaryFit train_binary_svm(const Matrix<double>& x, std::span<const int> y, const SvmConfig& cfg) {
  require(cfg.C > 0.0, ErrorCode::InvalidParam, "C must be positive");
  require(cfg.bias_feature > 0.0, ErrorCode::InvalidParam, "bias feature must be positive");
  require(y.size() == x.rows(), ErrorCode::DimensionMismatch, "one label per feature row required");
  const std::size_t n = x.rows(), d = x.cols();
  const bool has_pos = std::any_of(y.begin(), y.end(), [](int v) { return v > 0; });
  const bool has_neg = std::any_of(y.begin(), y.end(), [](int v) { return v < 0; });
  require(has_pos && has_neg, ErrorCode::DegenerateData, "binary SVM needs both +1 and -1 rows");

  // w_aug = (w, w_b) with x_aug = (x, B); the effective bias is w_b * B.
  const double B = cfg.bias_feature;
  std::vector<double> w(d, 0.0), alpha(n, 0.0), q(n);
  double wb = 0.0;
  for (std::size_t i = 0; i < n; ++i) q[i] = dot(x.row(i), x.row(i)) + B * B;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);

  BinaryFit fit;
  fit.machine = {w, 0.0};
  double best = hinge_objective(fit.machine, x, y, cfg.C);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double max_pg = -std::numeric_limits<double>::infinity(), min_pg = std::numeric_limits<double>::infinity();
    for (auto i : order) {
      const auto xi = x.row(i);
      const double yi = y[i] > 0 ? 1.0 : -1.0;
      const double g = yi * (dot(w, xi) + wb * B) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= cfg.C) pg = std::max(g, 0.0);
      max_pg = std::max(max_pg, pg);
      min_pg = std::min(min_pg, pg);
      if (pg == 0.0) continue;
      const double next = std::clamp(alpha[i] - g / q[i], 0.0, cfg.C);
      const double step = (next - alpha[i]) * yi;
      alpha[i] = next;
      for (std::size_t k = 0; k < d; ++k) w[k] += step * xi[k];
      wb += step * B;
    }
    ++fit.epochs_run;
    const LinearMachine current{w, wb * B};
    const double obj = hinge_objective(current, x, y, cfg.C);
    if (obj <= best) {
      best = obj;
      fit.machine = current;
    }
    fit.objective.push_back(best);
    if (max_pg - min_pg < cfg.tolerance) {
      // Converged: the final iterate is the optimum of the augmented problem.
      fit.machine = current;
      fit.objective.back() = std::min(best, obj);
      break;
    }
  }
  require(std::isfinite(best), ErrorCode::NonFiniteValue, "SVM objective is not finite");
  return fit;
}

SvmModel svm_train(const Matrix<double>& features, std::span<const int> labels, std::size_t num_classes,
                   const SvmConfig& cfg, dsp::FeatureKind kind) {
  require(labels.size() == features.rows(), ErrorCode::DimensionMismatch, "one label per feature row required");
  require(num_classes >= 2, ErrorCode::DegenerateData, "need at least two classes");
  std::vector<std::size_t> counts(num_classes, 0);
  std::vector<std::size_t> typed;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= -1 && labels[i] < static_cast<int>(num_classes), ErrorCode::InvalidParam,
            "label out of range: " + std::to_string(labels[i]));
    if (labels[i] >= 0) {
      ++counts[static_cast<std::size_t>(labels[i])];
      typed.push_back(i);
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    require(counts[c] > 0, ErrorCode::DegenerateData, "class " + std::to_string(c) + " has no training examples");

  SvmModel model;
  model.feature_kind = kind;
  model.C = cfg.C;
  model.dim = features.cols();
  model.scaler = cfg.standardize ? Standardizer::fit(features) : Standardizer::identity(features.cols());
  const Matrix<double> z = model.scaler.apply(features);

  Matrix<double> zt(typed.size(), z.cols());
  for (std::size_t r = 0; r < typed.size(); ++r) std::copy_n(z.row(typed[r]).begin(), z.cols(), zt.row(r).begin());
  std::vector<int> y(typed.size());
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t r = 0; r < typed.size(); ++r) y[r] = labels[typed[r]] == static_cast<int>(c) ? 1 : -1;
    SvmConfig machine_cfg = cfg;
    machine_cfg.seed = splitmix64(cfg.seed + c);
    model.type_machines.push_back(train_binary_svm(zt, y, machine_cfg).machine);
  }

  if (cfg.train_detection && typed.size() < labels.size()) {
    std::vector<int> det(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) det[i] = labels[i] >= 0 ? 1 : -1;
    SvmConfig det_cfg = cfg;
    det_cfg.seed = splitmix64(cfg.seed + num_classes);
    model.detection = train_binary_svm(z, det, det_cfg).machine;
  }
  return model;
}

SvmPrediction svm_predict(const SvmModel& model, std::span<const double> feature) {
  const auto z = model.scaler.apply(feature);
  SvmPrediction out;
  for (const auto& m : model.type_machines) {
    out.scores.push_back(m.score(z));
    require(std::isfinite(out.scores.back()), ErrorCode::NonFiniteValue, "SVM score is not finite");
  }
  out.argmax = static_cast<std::size_t>(std::max_element(out.scores.begin(), out.scores.end()) - out.scores.begin());
  out.detection_score = model.detection ? model.detection->score(z) : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<nn::NamedTensor> SvmModel::tensors() const {
  using nn::Tensor;
  const std::size_t k = type_machines.size();
  std::vector<double> tw, tb;
  for (const auto& m : type_machines) {
    tw.insert(tw.end(), m.w.begin(), m.w.end());
    tb.push_back(m.b);
  }
  std::vector<nn::NamedTensor> out{
      {"svm.scaler.mean", Tensor({dim}, scaler.mean)},
      {"svm.scaler.scale", Tensor({dim}, scaler.scale)},
      {"svm.type.w", Tensor({k, dim}, std::move(tw))},
      {"svm.type.b", Tensor({k}, std::move(tb))},
      {"svm.C", Tensor::scalar(C)},
  };
  if (detection) {
    out.push_back({"svm.det.w", Tensor({dim}, detection->w)});
    out.push_back({"svm.det.b", Tensor::scalar(detection->b)});
  }
  return out;
}

SvmModel SvmModel::from_tensors(const std::vector<nn::NamedTensor>& tensors) {
  auto find = [&](const std::string& name) -> const nn::Tensor* {
    for (const auto& t : tensors)
      if (t.name == name) return &t.value;
    return nullptr;
  };
  auto need = [&](const std::string& name) -> const nn::Tensor& {
    const auto* t = find(name);
    require(t != nullptr, ErrorCode::CorruptFile, "SVM checkpoint lacks tensor " + name);
    return *t;
  };
  SvmModel m;
  const auto& tw = need("svm.type.w");
  require(tw.rank() == 2, ErrorCode::CorruptFile, "svm.type.w must be rank 2");
  const std::size_t k = tw.dim(0);
  m.dim = tw.dim(1);
  const auto& mean = need("svm.scaler.mean");
  const auto& scale = need("svm.scaler.scale");
  const auto& tb = need("svm.type.b");
  require(mean.size() == m.dim && scale.size() == m.dim && tb.size() == k, ErrorCode::CorruptFile,
          "SVM checkpoint tensors disagree on shape");
  m.scaler.mean.assign(mean.data().begin(), mean.data().end());
  m.scaler.scale.assign(scale.data().begin(), scale.data().end());
  for (std::size_t c = 0; c < k; ++c) {
    LinearMachine lm;
    lm.w.assign(tw.ptr() + c * m.dim, tw.ptr() + (c + 1) * m.dim);
    lm.b = tb[c];
    m.type_machines.push_back(std::move(lm));
  }
  m.C = need("svm.C").item();
  if (const auto* dw = find("svm.det.w")) {
    require(dw->size() == m.dim, ErrorCode::CorruptFile, "svm.det.w has wrong size");
    m.detection = LinearMachine{{dw->data().begin(), dw->data().end()}, need("svm.det.b").item()};
  }
  return m;
}

}  // namespace gsb::models
