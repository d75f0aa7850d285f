#include "gsb/eval/report.hpp"

#include "gsb/audio.hpp"
#include "gsb/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>

namespace gsb::eval {
namespace {

using nlohmann::ordered_json;

ordered_json metrics_json(const std::vector<ClassMetrics>& ms, const std::vector<std::string>& names) {
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& m = ms[i];
    arr.push_back({{"label", names.at(i)},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support},
                   {"zero_division", m.zero_division}});
  }
  return arr;
}

std::vector<ClassMetrics> metrics_from(const nlohmann::json& arr) {
  std::vector<ClassMetrics> out;
  for (const auto& j : arr)
    out.push_back({j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>(),
                   j.at("support").get<std::size_t>(), j.at("zero_division").get<bool>()});
  return out;
}

ordered_json confusion_json(const Confusion& c) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < c.rows(); ++r) rows.push_back(std::vector<std::size_t>(c.row(r).begin(), c.row(r).end()));
  return rows;
}

Confusion confusion_from(const nlohmann::json& j) {
  const std::size_t n = j.size();
  Confusion c(n, n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = j.at(r).get<std::vector<std::size_t>>();
    require(row.size() == n, ErrorCode::CorruptFile, "confusion matrix is not square");
    std::copy(row.begin(), row.end(), c.row(r).begin());
  }
  return c;
}

std::vector<std::string> type_names() {
  std::vector<std::string> out;
  for (auto c : kAllClasses) out.emplace_back(class_key(c));
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace

EvalReport build_report(std::span<const EvalExample> examples) {
  EvalReport r;
  r.examples = examples.size();
  r.detection_confusion = detection_confusion(examples);
  r.detection = prf1(r.detection_confusion);
  r.overall_confusion = overall_confusion(examples);
  r.overall = prf1(r.overall_confusion, kNumClasses);
  r.unthresholded_confusion = unthresholded_confusion(examples);
  r.overall_unthresholded = prf1(r.unthresholded_confusion);
  r.relevant_confusion = relevant_confusion(examples);
  r.relevant = prf1(r.relevant_confusion);
  r.ap = type_average_precision(examples);
  const auto m = mean_ap(r.ap);
  r.map = m.value;
  r.map_classes = m.defined;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto name = std::string(class_key(kAllClasses[c]));
    if (!r.ap[c]) r.warnings.push_back("no positives for " + name + "; AP undefined and excluded from mAP");
    if (r.relevant[c].support == 0) r.warnings.push_back("relevant set has no " + name + " examples");
  }
  return r;
}

std::string report_text(const EvalReport& r) {
  std::string out;
  out += "Gunshot detection\n";
  out += pad("Class", 18) + pad("Precision", 11) + pad("Recall", 9) + pad("F1", 8) + "Support\n";
  const char* det_names[] = {"Gunshot", "No Gunshot"};
  for (std::size_t i = 0; i < r.detection.size(); ++i) {
    const auto& m = r.detection[i];
    out += pad(det_names[i], 18) + pad(fmt("%.2f", m.precision), 11) + pad(fmt("%.2f", m.recall), 9) +
           pad(fmt("%.2f", m.f1), 8) + std::to_string(m.support) + "\n";
  }
  out += "\nGun type classification\n";
  out += pad("Class", 18) + pad("Overall P", 11) + pad("Overall R", 11) + pad("Overall F1", 12) +
         pad("Relevant P", 12) + pad("Relevant R", 12) + pad("Relevant F1", 13) + "Support\n";
  for (std::size_t c = 0; c < r.overall.size(); ++c) {
    const auto& o = r.overall[c];
    const auto& v = r.relevant.at(c);
    out += pad(std::string(class_name(kAllClasses[c])), 18) + pad(fmt("%.2f", o.precision), 11) +
           pad(fmt("%.2f", o.recall), 11) + pad(fmt("%.2f", o.f1), 12) + pad(fmt("%.2f", v.precision), 12) +
           pad(fmt("%.2f", v.recall), 12) + pad(fmt("%.2f", v.f1), 13) + std::to_string(o.support) + "\n";
  }
  out += "\nAverage precision\n";
  for (std::size_t c = 0; c < kNumClasses; ++c)
    out += pad(std::string(class_name(kAllClasses[c])), 18) + (r.ap[c] ? fmt("%.3f", *r.ap[c]) : "n/a") + "\n";
  out += pad("mAP", 18) + fmt("%.3f", r.map) + " (" + std::to_string(r.map_classes) + " classes)\n";
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  return out;
}

std::string report_json(const EvalReport& r) {
  ordered_json j;
  j["version"] = r.schema_version;
  j["dataset_hash"] = r.dataset_hash;
  j["split_seed"] = r.split_seed;
  j["split"] = r.split_name;
  j["model"] = r.model;
  j["config"] = r.config;
  j["examples"] = r.examples;
  const std::vector<std::string> det_names = {"gunshot", "no_gunshot"};
  j["detection"] = {{"metrics", metrics_json(r.detection, det_names)},
                    {"confusion", confusion_json(r.detection_confusion)}};
  j["overall"] = {{"metrics", metrics_json(r.overall, type_names())},
                  {"confusion", confusion_json(r.overall_confusion)}};
  j["overall_unthresholded"] = {{"metrics", metrics_json(r.overall_unthresholded, type_names())},
                                {"confusion", confusion_json(r.unthresholded_confusion)}};
  j["relevant"] = {{"metrics", metrics_json(r.relevant, type_names())},
                   {"confusion", confusion_json(r.relevant_confusion)}};
  ordered_json ap = ordered_json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c)
    ap[std::string(class_key(kAllClasses[c]))] = r.ap[c] ? ordered_json(*r.ap[c]) : ordered_json(nullptr);
  j["ap"] = ap;
  j["map"] = r.map;
  j["map_classes"] = r.map_classes;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

EvalReport parse_report(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.schema_version = j.at("version").get<int>();
    require(r.schema_version == kReportSchemaVersion, ErrorCode::CorruptFile,
            "unsupported report version " + std::to_string(r.schema_version));
    r.dataset_hash = j.at("dataset_hash").get<std::string>();
    r.split_seed = j.at("split_seed").get<std::uint64_t>();
    r.split_name = j.at("split").get<std::string>();
    r.model = j.at("model").get<std::map<std::string, std::string>>();
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    r.examples = j.at("examples").get<std::size_t>();
    r.detection = metrics_from(j.at("detection").at("metrics"));
    r.detection_confusion = confusion_from(j.at("detection").at("confusion"));
    r.overall = metrics_from(j.at("overall").at("metrics"));
    r.overall_confusion = confusion_from(j.at("overall").at("confusion"));
    r.overall_unthresholded = metrics_from(j.at("overall_unthresholded").at("metrics"));
    r.unthresholded_confusion = confusion_from(j.at("overall_unthresholded").at("confusion"));
    r.relevant = metrics_from(j.at("relevant").at("metrics"));
    r.relevant_confusion = confusion_from(j.at("relevant").at("confusion"));
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& v = j.at("ap").at(std::string(class_key(kAllClasses[c])));
      if (!v.is_null()) r.ap[c] = v.get<double>();
    }
    r.map = j.at("map").get<double>();
    r.map_classes = j.at("map_classes").get<std::size_t>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("bad report file: ") + e.what());
  }
}

void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
  const std::string text = format == ReportFormat::TextTable ? report_text(report) : report_json(report);
  write_file_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

}  // namespace gsb::eval
