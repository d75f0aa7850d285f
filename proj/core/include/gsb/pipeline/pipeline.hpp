#pragma once

#include "gsb/dsp/features.hpp"
#include "gsb/error.hpp"
#include "gsb/eval/report.hpp"
#include "gsb/eval/split.hpp"
#include "gsb/manifest.hpp"
#include "gsb/models/cnn.hpp"
#include "gsb/models/svm.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gsb::pipeline {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIo = 3, kExitNumeric = 4 };

/// Maps a library error onto the command-line exit-code contract.
int exit_code_for(ErrorCode code);

/// Default seed, overridden by the GSB_SEED environment variable when set.
std::uint64_t default_seed();

// ---- generate --------------------------------------------------------------

struct GenerateConfig {
  std::array<int, kNumClasses> class_counts{};
  int negatives = 0;
  bool clean = true;
  fs::path out_dir;
  std::uint64_t seed = 0;
  double clip_duration_s = 1.5;
  int jobs = 1;
};

/// Counts for a named preset: "paper-ratio" scales the reference class
/// counts by `scale`; "uniform" uses `per_class` for every class.
std::array<int, kNumClasses> preset_counts(const std::string& preset, double scale, int per_class);

struct GenerateResult {
  Manifest manifest;
  std::array<std::size_t, kNumClasses> histogram{};
  std::size_t negatives = 0;
};

GenerateResult cmd_generate(const GenerateConfig& cfg);

// ---- featurize -------------------------------------------------------------

struct FeaturizeConfig {
  fs::path manifest;
  dsp::FeatureKind kind = dsp::FeatureKind::Mel;
  fs::path out_dir;
  std::size_t codebook_size = dsp::kDefaultCodebookSize;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct FeaturizeResult {
  std::size_t computed = 0;
  std::size_t skipped = 0;  // cache already up to date
  std::vector<std::string> failed;  // ids whose audio could not be read
};

/// Cache path for one clip: <dir>/<id>.<kind>.gsbf
fs::path feature_path(const fs::path& dir, const std::string& id, dsp::FeatureKind kind);
fs::path codebook_path(const fs::path& dir);

/// One feature cache per manifest row. Rows whose cache header already holds
/// the current source hash are skipped; unreadable audio is recorded in
/// `failed` and processing continues.
FeaturizeResult cmd_featurize(const FeaturizeConfig& cfg);

/// Mel matrix (Mel kind) or 1-row vector (other kinds) for a clip, computed
/// from audio already normalised to the pipeline rate.
Matrix<double> compute_features(const AudioClip& clip, dsp::FeatureKind kind, const dsp::BoawCodebook* codebook);

// ---- train -----------------------------------------------------------------

enum class ModelKind { Svm, Cnn };
std::string_view model_kind_key(ModelKind kind);
std::optional<ModelKind> model_kind_from_key(std::string_view key);

struct TrainCommandConfig {
  fs::path manifest;
  fs::path features;
  ModelKind model = ModelKind::Cnn;
  dsp::FeatureKind svm_feature = dsp::FeatureKind::MelStats;
  fs::path out_dir;
  std::optional<fs::path> split_file;  // computed from split_seed when absent
  std::uint64_t split_seed = 0;
  models::TrainConfig cnn;
  models::SvmConfig svm;
  double threshold = 0.5;
};

struct TrainCommandResult {
  eval::SplitSpec split;
  std::optional<models::TrainHistory> history;
  fs::path checkpoint;
};

/// Writes <out>/model.gsbw, <out>/model.json (metadata), <out>/split.json and,
/// for the CNN, <out>/history.json. The CNN checkpoint is rewritten after each
/// improving epoch, so an aborted run leaves the last good one behind.
TrainCommandResult cmd_train(const TrainCommandConfig& cfg);

// ---- evaluate --------------------------------------------------------------

struct EvaluateConfig {
  fs::path checkpoint;  // model.gsbw; metadata read from the sibling model.json
  fs::path manifest;
  fs::path features;
  std::optional<fs::path> split_file;  // evaluate every manifest row when absent
  std::string split_name = "test";
  fs::path out_dir;
  std::optional<double> threshold;  // defaults to the checkpoint's threshold
};

/// Loaded model plus its metadata.
struct LoadedModel {
  ModelKind kind = ModelKind::Cnn;
  dsp::FeatureKind feature = dsp::FeatureKind::Mel;
  std::optional<models::JointCnnModel> cnn;
  std::optional<models::SvmModel> svm;
  double threshold = 0.5;
  std::string dataset_hash;
  std::map<std::string, std::string> metadata;
};

LoadedModel load_model(const fs::path& checkpoint);

/// Runs the model over the given manifest rows (by id, in order).
std::vector<eval::EvalExample> run_model(const LoadedModel& model, const Manifest& manifest, const fs::path& features,
                                         const std::vector<std::string>& ids, double threshold);

/// Writes <out>/report.txt and <out>/report.json. A warning is added when the
/// evaluated ids overlap the model's training split on the same dataset.
eval::EvalReport cmd_evaluate(const EvaluateConfig& cfg);

// ---- crossval --------------------------------------------------------------

struct CrossvalConfig {
  fs::path manifest;
  fs::path features;
  ModelKind model = ModelKind::Cnn;
  dsp::FeatureKind svm_feature = dsp::FeatureKind::MelStats;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  fs::path out_dir;
  models::TrainConfig cnn;
  models::SvmConfig svm;
  double threshold = 0.5;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over folds
};

struct CrossvalResult {
  std::vector<eval::EvalReport> folds;
  std::map<std::string, std::vector<double>> per_fold;  // metric name -> one value per fold
  std::map<std::string, MetricSummary> aggregate;
};

/// Headline numbers pulled from a report: detection F1, macro F1 of each
/// type block, and mAP.
std::map<std::string, double> headline_metrics(const eval::EvalReport& report);

/// Folds over every manifest row. Fold i is the test set; for the CNN fold
/// (i + 1) mod k is the early-stopping set and the rest train. Writes
/// <out>/fold_<i>/report.{txt,json} and <out>/crossval.json.
CrossvalResult cmd_crossval(const CrossvalConfig& cfg);

}  // namespace gsb::pipeline
