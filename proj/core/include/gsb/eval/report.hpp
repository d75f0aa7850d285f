#pragma once

#include "gsb/eval/metrics.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gsb::eval {

inline constexpr int kReportSchemaVersion = 1;

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  std::string dataset_hash;
  std::uint64_t split_seed = 0;
  std::string split_name;  // which partition was evaluated ("test", "val", ...)
  std::map<std::string, std::string> model;   // checkpoint metadata
  std::map<std::string, std::string> config;  // resolved command config
  std::size_t examples = 0;

  std::vector<ClassMetrics> detection;  // {Gunshot, NoGunshot}
  Confusion detection_confusion;
  std::vector<ClassMetrics> overall;                // fn/fp propagation through the detector
  Confusion overall_confusion;                      // (K+1)x(K+1)
  std::vector<ClassMetrics> overall_unthresholded;  // all true gunshots, detector ignored
  Confusion unthresholded_confusion;
  std::vector<ClassMetrics> relevant;  // detected true gunshots only
  Confusion relevant_confusion;
  std::array<std::optional<double>, kNumClasses> ap{};
  double map = 0.0;
  std::size_t map_classes = 0;
  std::vector<std::string> warnings;

  bool operator==(const EvalReport&) const = default;
};

/// Computes every metric block from evaluated examples.
EvalReport build_report(std::span<const EvalExample> examples);

enum class ReportFormat { TextTable, RecordFile };

/// Fixed-width tables: detection, then type metrics with Overall and Relevant
/// columns side by side, then AP per class and mAP. Rows follow class order.
std::string report_text(const EvalReport& report);
/// JSON record with schema version; parse_report(report_json(r)) == r.
std::string report_json(const EvalReport& report);
EvalReport parse_report(const std::string& text);

void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace gsb::eval
