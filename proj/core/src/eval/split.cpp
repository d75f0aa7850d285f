#include "gsb/eval/split.hpp"

#include "gsb/error.hpp"
#include "gsb/labels.hpp"
#include "gsb/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace gsb::eval {
namespace {

// Table order of the strata: the five classes, then negatives.
std::vector<std::string> stratum_order() {
  std::vector<std::string> out;
  for (auto c : kAllClasses) out.emplace_back(class_key(c));
  out.emplace_back(detection_key(DetectionLabel::NoGunshot));
  return out;
}

std::vector<std::string> in_manifest_order(const Manifest& m, const std::set<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& r : m.rows)
    if (ids.contains(r.id)) out.push_back(r.id);
  return out;
}

}  // namespace

SplitSpec stratified_split(const Manifest& manifest, SplitRatios ratios, std::uint64_t seed) {
  require(ratios.train >= 0 && ratios.val >= 0 && ratios.test >= 0, ErrorCode::InvalidParam, "negative split ratio");
  require(std::abs(ratios.train + ratios.val + ratios.test - 1.0) < 1e-9, ErrorCode::InvalidParam,
          "split ratios must sum to 1");
  std::map<std::string, std::vector<std::string>> by_stratum;
  for (const auto& r : manifest.rows) by_stratum[Manifest::stratum(r)].push_back(r.id);

  std::set<std::string> train, val, test;
  std::uint64_t stream = 0;
  for (const auto& key : stratum_order()) {
    auto it = by_stratum.find(key);
    ++stream;
    if (it == by_stratum.end()) continue;
    auto ids = it->second;
    Rng rng = Rng::for_stream(seed, stream);
    rng.shuffle(std::span(ids));
    const auto n = static_cast<double>(ids.size());
    const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i < n_val) val.insert(ids[i]);
      else if (i < n_val + n_test) test.insert(ids[i]);
      else train.insert(ids[i]);
    }
  }
  return {in_manifest_order(manifest, train), in_manifest_order(manifest, val), in_manifest_order(manifest, test), seed};
}

FoldPlan kfold(const std::vector<std::vector<std::string>>& ids_by_class, std::size_t k, std::uint64_t seed) {
  require(k >= 2, ErrorCode::InvalidParam, "k must be at least 2");
  FoldPlan plan{std::vector<std::vector<std::string>>(k), seed};
  std::size_t next = 0;
  for (std::size_t c = 0; c < ids_by_class.size(); ++c) {
    auto ids = ids_by_class[c];
    Rng rng = Rng::for_stream(seed, c + 1);
    rng.shuffle(std::span(ids));
    for (auto& id : ids) plan.folds[next++ % k].push_back(std::move(id));
  }
  return plan;
}

FoldPlan kfold(const Manifest& manifest, const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed) {
  const std::set<std::string> wanted(ids.begin(), ids.end());
  const auto order = stratum_order();
  std::vector<std::vector<std::string>> groups(order.size());
  for (const auto& r : manifest.rows) {
    if (!wanted.contains(r.id)) continue;
    const auto pos = std::find(order.begin(), order.end(), Manifest::stratum(r)) - order.begin();
    groups[static_cast<std::size_t>(pos)].push_back(r.id);
  }
  return kfold(groups, k, seed);
}

std::string serialize_split(const SplitSpec& split) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["seed"] = split.seed;
  j["train"] = split.train_ids;
  j["val"] = split.val_ids;
  j["test"] = split.test_ids;
  return j.dump(1) + "\n";
}

SplitSpec parse_split(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    require(j.at("version").get<int>() == 1, ErrorCode::CorruptFile, "unsupported split file version");
    SplitSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_ids = j.at("train").get<std::vector<std::string>>();
    s.val_ids = j.at("val").get<std::vector<std::string>>();
    s.test_ids = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("bad split file: ") + e.what());
  }
}

}  // namespace gsb::eval
