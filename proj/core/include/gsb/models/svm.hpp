#pragma once

#include "gsb/dsp/features.hpp"
#include "gsb/matrix.hpp"
#include "gsb/nn/checkpoint.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gsb::models {

/// Per-dimension z-scoring fitted on training rows. Constant dimensions get
/// unit scale so they map to zero instead of dividing by zero.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix<double>& x);
  static Standardizer identity(std::size_t dim);
  std::vector<double> apply(std::span<const double> x) const;
  Matrix<double> apply(const Matrix<double>& x) const;
};

struct LinearMachine {
  std::vector<double> w;
  double b = 0.0;

  double score(std::span<const double> x) const;
};

struct SvmConfig {
  double C = 1.0;
  std::size_t epochs = 1000;  // upper bound; stops early once the KKT gap is below tolerance
  std::uint64_t seed = 1;
  double tolerance = 1e-6;
  bool standardize = true;
  double bias_feature = 10.0;  // value of the constant feature carrying the bias
  bool train_detection = true;
};

/// 0.5 ||w||^2 + C sum_i max(0, 1 - y_i (w.x_i + b)), y in {-1, +1}.
double hinge_objective(const LinearMachine& m, const Matrix<double>& x, std::span<const int> y, double C);

struct BinaryFit {
  LinearMachine machine;
  std::vector<double> objective;  // best-so-far primal objective after each epoch
  std::size_t epochs_run = 0;
};

/// Shuffled dual coordinate descent on the L1-hinge SVM. `y` holds +1/-1.
BinaryFit train_binary_svm(const Matrix<double>& x, std::span<const int> y, const SvmConfig& cfg);

struct SvmModel {
  dsp::FeatureKind feature_kind = dsp::FeatureKind::MelStats;
  double C = 1.0;
  std::size_t dim = 0;
  Standardizer scaler;
  std::vector<LinearMachine> type_machines;  // one per class, one-vs-rest
  std::optional<LinearMachine> detection;    // gunshot (+1) vs no-gunshot (-1)

  std::vector<nn::NamedTensor> tensors() const;
  static SvmModel from_tensors(const std::vector<nn::NamedTensor>& tensors);
};

struct SvmPrediction {
  std::vector<double> scores;
  std::size_t argmax = 0;
  double detection_score = 0.0;  // +inf when the model has no detection machine
};

/// `labels[i]` is a class index in [0, num_classes) or -1 for a no-gunshot row.
/// Type machines see only the labelled rows; the detection machine is fitted
/// when both kinds are present and cfg.train_detection is set.
/// Throws DegenerateData if num_classes < 2 or any class has no rows.
SvmModel svm_train(const Matrix<double>& features, std::span<const int> labels, std::size_t num_classes,
                   const SvmConfig& cfg, dsp::FeatureKind kind = dsp::FeatureKind::MelStats);

/// Scores on the raw (unstandardised) feature; argmax ties go to the lowest index.
SvmPrediction svm_predict(const SvmModel& model, std::span<const double> feature);

}  // namespace gsb::models
