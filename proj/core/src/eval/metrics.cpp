#include "gsb/eval/metrics.hpp"

#include "gsb/error.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

namespace gsb::eval {
namespace {

constexpr std::size_t K = kNumClasses;

double ratio(std::size_t num, std::size_t den, bool& zero_div) {
  if (den == 0) {
    zero_div = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<ClassMetrics> prf1(const Confusion& confusion, std::optional<std::size_t> classes) {
  require(confusion.rows() == confusion.cols(), ErrorCode::DimensionMismatch, "confusion matrix must be square");
  const std::size_t n = classes.value_or(confusion.rows());
  require(n <= confusion.rows(), ErrorCode::DimensionMismatch, "more scored classes than matrix rows");
  std::vector<ClassMetrics> out(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < confusion.cols(); ++j) row += confusion(c, j);
    for (std::size_t i = 0; i < confusion.rows(); ++i) col += confusion(i, c);
    const std::size_t tp = confusion(c, c);
    auto& m = out[c];
    m.support = row;
    m.precision = ratio(tp, col, m.zero_division);
    m.recall = ratio(tp, row, m.zero_division);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  return out;
}

double macro_f1(std::span<const ClassMetrics> metrics) {
  if (metrics.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : metrics) s += m.f1;
  return s / static_cast<double>(metrics.size());
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const bool> positives,
                                        std::span<const std::string> ids) {
  require(scores.size() == positives.size(), ErrorCode::DimensionMismatch, "one label per score required");
  require(ids.empty() || ids.size() == scores.size(), ErrorCode::DimensionMismatch, "one id per score required");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids.empty() ? a < b : ids[a] < ids[b];
  });
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positives[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

MeanAp mean_ap(std::span<const std::optional<double>> per_class) {
  MeanAp out;
  double s = 0.0;
  for (const auto& ap : per_class)
    if (ap) {
      s += *ap;
      ++out.defined;
    }
  out.value = out.defined ? s / static_cast<double>(out.defined) : 0.0;
  return out;
}

int EvalExample::predicted_class() const {
  return static_cast<int>(std::max_element(type_scores.begin(), type_scores.end()) - type_scores.begin());
}

Confusion detection_confusion(std::span<const EvalExample> examples) {
  Confusion m(2, 2, 0);
  for (const auto& e : examples) ++m(e.is_gunshot() ? 0 : 1, e.detected ? 0 : 1);
  return m;
}

Confusion overall_confusion(std::span<const EvalExample> examples) {
  Confusion m(K + 1, K + 1, 0);
  for (const auto& e : examples) {
    const std::size_t t = e.is_gunshot() ? static_cast<std::size_t>(e.true_class) : K;
    const std::size_t p = e.detected ? static_cast<std::size_t>(e.predicted_class()) : K;
    ++m(t, p);
  }
  return m;
}

Confusion unthresholded_confusion(std::span<const EvalExample> examples) {
  Confusion m(K, K, 0);
  for (const auto& e : examples)
    if (e.is_gunshot()) ++m(static_cast<std::size_t>(e.true_class), static_cast<std::size_t>(e.predicted_class()));
  return m;
}

Confusion relevant_confusion(std::span<const EvalExample> examples) {
  Confusion m(K, K, 0);
  for (const auto& e : examples)
    if (e.is_gunshot() && e.detected)
      ++m(static_cast<std::size_t>(e.true_class), static_cast<std::size_t>(e.predicted_class()));
  return m;
}

std::vector<std::string> relevant_ids(std::span<const EvalExample> examples) {
  std::vector<std::string> out;
  for (const auto& e : examples)
    if (e.is_gunshot() && e.detected) out.push_back(e.id);
  return out;
}

std::vector<ClassMetrics> overall_metrics(std::span<const EvalExample> examples) {
  return prf1(overall_confusion(examples), K);
}

std::vector<ClassMetrics> relevant_metrics(std::span<const EvalExample> examples) {
  return prf1(relevant_confusion(examples));
}

std::array<std::optional<double>, kNumClasses> type_average_precision(std::span<const EvalExample> examples) {
  std::vector<const EvalExample*> pos;
  std::vector<std::string> ids;
  for (const auto& e : examples)
    if (e.is_gunshot()) {
      pos.push_back(&e);
      ids.push_back(e.id);
    }
  std::array<std::optional<double>, kNumClasses> out;
  std::vector<double> scores(pos.size());
  // vector<bool> has no contiguous storage to span over.
  auto hit = std::make_unique<bool[]>(pos.size());
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t i = 0; i < pos.size(); ++i) {
      scores[i] = pos[i]->type_scores[c];
      hit[i] = pos[i]->true_class == static_cast<int>(c);
    }
    out[c] = average_precision(scores, std::span<const bool>(hit.get(), pos.size()), ids);
  }
  return out;
}

}  // namespace gsb::eval
