#pragma once

#include "gsb/manifest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gsb::eval {

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Ids of each partition, each listed in manifest order.
struct SplitSpec {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;

  bool operator==(const SplitSpec&) const = default;
};

/// Per stratum: shuffle with the seed, take floor(n * val) for val and
/// floor(n * test) for test, leave the rest (remainders included) to train.
SplitSpec stratified_split(const Manifest& manifest, SplitRatios ratios, std::uint64_t seed);

struct FoldPlan {
  std::vector<std::vector<std::string>> folds;
  std::uint64_t seed = 0;
};

/// Shuffles each class list, concatenates them in the given class order and
/// deals the result round-robin into k folds. Fold sizes differ by at most one
/// overall and per class.
FoldPlan kfold(const std::vector<std::vector<std::string>>& ids_by_class, std::size_t k, std::uint64_t seed);

/// Groups `ids` (a subset of the manifest) by stratum in first-seen order of
/// the fixed stratum list, then calls kfold.
FoldPlan kfold(const Manifest& manifest, const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed);

std::string serialize_split(const SplitSpec& split);
SplitSpec parse_split(const std::string& text);

}  // namespace gsb::eval
