#pragma once

#include "gsb/labels.hpp"
#include "gsb/matrix.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsb::eval {

/// Rows are ground truth, columns are predictions.
using Confusion = Matrix<std::size_t>;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;     // row sum
  bool zero_division = false;  // some ratio was 0/0 and was reported as 0

  bool operator==(const ClassMetrics&) const = default;
};

/// Per-class P/R/F1 for the first `classes` rows/columns of a square
/// confusion matrix (defaults to all). Extra trailing rows/columns act as a
/// "none" label: they feed fn/fp of the scored classes but are not scored.
std::vector<ClassMetrics> prf1(const Confusion& confusion, std::optional<std::size_t> classes = std::nullopt);

double macro_f1(std::span<const ClassMetrics> metrics);

/// Precision at each positive rank averaged over positives, with examples
/// sorted by score descending and ties broken by ascending id (or index when
/// `ids` is empty). nullopt when there are no positives.
std::optional<double> average_precision(std::span<const double> scores, std::span<const bool> positives,
                                        std::span<const std::string> ids = {});

struct MeanAp {
  double value = 0.0;
  std::size_t defined = 0;
};

/// Unweighted mean over the defined entries; 0 with defined = 0 if none.
MeanAp mean_ap(std::span<const std::optional<double>> per_class);

/// One evaluated clip: ground truth plus the model's detection decision and
/// type scores (posteriors for the CNN, softmaxed margins for the SVM).
struct EvalExample {
  std::string id;
  int true_class = -1;  // -1 for no-gunshot
  bool detected = false;
  double p_gunshot = 0.0;
  std::array<double, kNumClasses> type_scores{};

  bool is_gunshot() const { return true_class >= 0; }
  int predicted_class() const;  // argmax of type_scores, lowest index on ties
};

/// 2x2 matrix in the order {Gunshot, NoGunshot}.
Confusion detection_confusion(std::span<const EvalExample> examples);

/// (K+1)x(K+1) matrix where index K means "no gunshot" on the truth axis and
/// "not detected" on the prediction axis. A missed gunshot lands in column K
/// (fn for its class); a false alarm lands in row K (fp for its type).
Confusion overall_confusion(std::span<const EvalExample> examples);
/// KxK matrix over every true gunshot using the type argmax, ignoring the detector.
Confusion unthresholded_confusion(std::span<const EvalExample> examples);
/// KxK matrix over examples that are gunshots and were detected as such.
Confusion relevant_confusion(std::span<const EvalExample> examples);

/// Ids retained by the Relevant filter, in input order.
std::vector<std::string> relevant_ids(std::span<const EvalExample> examples);

std::vector<ClassMetrics> overall_metrics(std::span<const EvalExample> examples);
std::vector<ClassMetrics> relevant_metrics(std::span<const EvalExample> examples);

/// AP per class over the true-gunshot examples, ranking by type score.
std::array<std::optional<double>, kNumClasses> type_average_precision(std::span<const EvalExample> examples);

}  // namespace gsb::eval
