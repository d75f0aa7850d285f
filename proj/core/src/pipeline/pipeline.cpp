#include "gsb/pipeline/pipeline.hpp"

#include "gsb/audio.hpp"
#include "gsb/dsp/feature_cache.hpp"
#include "gsb/dsp/resample.hpp"
#include "gsb/dsp/spectral.hpp"
#include "gsb/nn/checkpoint.hpp"
#include "gsb/rng.hpp"
#include "gsb/synth/synthgun.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <thread>

namespace gsb::pipeline {
namespace {

using nlohmann::ordered_json;

constexpr std::uint32_t kFeatureParamsVersion = 1;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hash_string(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()), h);
}

std::string read_text(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& p, const std::string& s) { write_file_bytes(p, {s.begin(), s.end()}); }

std::string feature_params(dsp::FeatureKind kind) {
  return std::string(dsp::feature_kind_key(kind)) + ";rate=" + std::to_string(kPipelineRate) +
         ";win=" + std::to_string(dsp::kWindow) + ";hop=" + std::to_string(dsp::kHop) +
         ";mels=" + std::to_string(dsp::kMelBands) + ";v=" + std::to_string(kFeatureParamsVersion);
}

/// Runs fn(i) for i in [0, n) on `jobs` threads; each index is touched once.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = n;
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int label_of(const ManifestRow& row) { return row.cls ? class_index(*row.cls) : -1; }

const ManifestRow& row_for(const Manifest& m, const std::string& id) {
  const auto* row = m.find(id);
  require(row != nullptr, ErrorCode::InvalidParam, "id " + id + " is not in the manifest");
  return *row;
}

dsp::FeatureCache load_cache(const fs::path& dir, const std::string& id, dsp::FeatureKind kind) {
  const auto path = feature_path(dir, id, kind);
  require(fs::exists(path), ErrorCode::InvalidParam,
          "missing " + std::string(dsp::feature_kind_key(kind)) + " features for " + id + " (" + path.string() +
              "); run featurize first");
  return dsp::read_feature_cache(path);
}

Matrix<double> load_rows(const fs::path& dir, const std::vector<std::string>& ids, dsp::FeatureKind kind) {
  Matrix<double> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto v = load_cache(dir, ids[i], kind).vector();
    if (i == 0) out = Matrix<double>(ids.size(), v.size());
    require(v.size() == out.cols(), ErrorCode::DimensionMismatch, "feature length differs for " + ids[i]);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

models::CnnDataset load_cnn_set(const Manifest& m, const fs::path& dir, const std::vector<std::string>& ids) {
  models::CnnDataset d;
  for (const auto& id : ids) {
    d.mels.push_back(load_cache(dir, id, dsp::FeatureKind::Mel).matrix());
    d.labels.push_back(label_of(row_for(m, id)));
  }
  return d;
}

std::vector<std::string> class_keys() {
  std::vector<std::string> out;
  for (auto c : kAllClasses) out.emplace_back(class_key(c));
  return out;
}

ordered_json train_config_json(const models::TrainConfig& c) {
  return {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"lr", c.lr},
          {"momentum", c.momentum},     {"lambda_type", c.lambda_type}, {"patience", c.patience},
          {"seed", c.seed},             {"input_frames", c.input_frames}};
}

ordered_json svm_config_json(const models::SvmConfig& c) {
  return {{"C", c.C},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"tolerance", c.tolerance},
          {"standardize", c.standardize},
          {"bias_feature", c.bias_feature},
          {"train_detection", c.train_detection}};
}

ordered_json model_metadata(ModelKind kind, dsp::FeatureKind feature, double threshold, const std::string& dataset_hash,
                            std::uint64_t split_seed, const ordered_json& train_cfg, std::size_t input_frames) {
  const std::string arch = kind == ModelKind::Cnn ? models::cnn_architecture() : "linear-ovr-svm;classes=5";
  ordered_json j;
  j["model"] = model_kind_key(kind);
  j["architecture"] = arch;
  j["architecture_hash"] = hex64(hash_string(arch));
  j["feature_kind"] = dsp::feature_kind_key(feature);
  j["feature_params"] = {{"sample_rate", kPipelineRate}, {"window", dsp::kWindow}, {"hop", dsp::kHop},
                         {"n_mels", dsp::kMelBands},     {"input_frames", input_frames}};
  j["classes"] = class_keys();
  j["threshold"] = threshold;
  j["dataset_hash"] = dataset_hash;
  j["split_seed"] = split_seed;
  j["train_config"] = train_cfg;
  return j;
}

LoadedModel trained_model(ModelKind kind, dsp::FeatureKind feature, double threshold, std::string dataset_hash) {
  LoadedModel m;
  m.kind = kind;
  m.feature = feature;
  m.threshold = threshold;
  m.dataset_hash = std::move(dataset_hash);
  return m;
}

models::CheckpointHook checkpoint_writer(const fs::path& path) {
  return [path](const models::JointCnnModel& model, const models::EpochRecord&) {
    nn::save_checkpoint(path, model.tensors());
  };
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

std::vector<std::string> select_ids(const Manifest& m, const std::set<std::string>& exclude) {
  std::vector<std::string> out;
  for (const auto& r : m.rows)
    if (!exclude.contains(r.id)) out.push_back(r.id);
  return out;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::CorruptFile:
    case ErrorCode::UnsupportedFormat:
      return kExitIo;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::TapeConsumed:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GSB_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    require(end && *end == '\0', ErrorCode::InvalidParam, std::string("GSB_SEED is not an integer: ") + env);
    return v;
  }
  return 1;
}

std::array<int, kNumClasses> preset_counts(const std::string& preset, double scale, int per_class) {
  if (preset == "paper-ratio") return synth::scaled_class_counts(scale);
  if (preset == "uniform") {
    require(per_class >= 0, ErrorCode::InvalidParam, "per-class count must be >= 0");
    std::array<int, kNumClasses> out;
    out.fill(per_class);
    return out;
  }
  fail(ErrorCode::InvalidParam, "unknown preset '" + preset + "' (expected paper-ratio or uniform)");
}

GenerateResult cmd_generate(const GenerateConfig& cfg) {
  synth::DatasetRequest req;
  req.class_counts = cfg.class_counts;
  req.negatives = cfg.negatives;
  req.clean = cfg.clean;
  req.out_dir = cfg.out_dir;
  req.seed = cfg.seed;
  req.clip_duration_s = cfg.clip_duration_s;
  req.jobs = cfg.jobs;
  GenerateResult out;
  out.manifest = synth::generate_dataset(req);
  for (const auto& r : out.manifest.rows) {
    if (r.cls) ++out.histogram[static_cast<std::size_t>(class_index(*r.cls))];
    else ++out.negatives;
  }
  return out;
}

fs::path feature_path(const fs::path& dir, const std::string& id, dsp::FeatureKind kind) {
  return dir / (id + "." + std::string(dsp::feature_kind_key(kind)) + ".gsbf");
}

fs::path codebook_path(const fs::path& dir) { return dir / "boaw_codebook.gsbf"; }

Matrix<double> compute_features(const AudioClip& clip, dsp::FeatureKind kind, const dsp::BoawCodebook* codebook) {
  auto as_row = [](const std::vector<double>& v) {
    Matrix<double> m(1, v.size());
    std::copy(v.begin(), v.end(), m.values().begin());
    return m;
  };
  switch (kind) {
    case dsp::FeatureKind::Mel:
      return dsp::mel_spectrogram(clip).frames;
    case dsp::FeatureKind::MelStats:
      return as_row(dsp::mel_stats(dsp::mel_spectrogram(clip)).values);
    case dsp::FeatureKind::Boaw:
      require(codebook != nullptr, ErrorCode::InvalidParam, "BoAW features need a codebook");
      return as_row(dsp::boaw_encode(dsp::mel_spectrogram(clip), *codebook).values);
    case dsp::FeatureKind::Autocorr:
      return as_row(dsp::autocorr_features(clip).values);
  }
  fail(ErrorCode::InvalidParam, "unknown feature kind");
}

FeaturizeResult cmd_featurize(const FeaturizeConfig& cfg) {
  const Manifest manifest = load_manifest(cfg.manifest);
  fs::create_directories(cfg.out_dir);
  const std::size_t n = manifest.rows.size();

  // Source hashes first: audio bytes plus feature parameters.
  std::vector<std::uint64_t> audio_hash(n, 0);
  std::vector<char> readable(n, 1);
  std::vector<std::optional<AudioClip>> clips(n);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    try {
      const auto bytes = read_file_bytes(manifest.resolve(manifest.rows[i]));
      audio_hash[i] = fnv1a64(bytes);
      clips[i] = dsp::normalize_input(decode_wav(bytes, manifest.rows[i].path));
    } catch (const Error&) {
      readable[i] = 0;
    }
  });

  std::optional<dsp::BoawCodebook> codebook;
  std::string param_key = feature_params(cfg.kind);
  if (cfg.kind == dsp::FeatureKind::Boaw) {
    std::uint64_t h = hash_string(param_key + ";k=" + std::to_string(cfg.codebook_size) + ";seed=" +
                                  std::to_string(cfg.seed));
    for (std::size_t i = 0; i < n; ++i) h = fnv1a64(std::span(reinterpret_cast<const unsigned char*>(&audio_hash[i]), 8), h);
    const std::string cb_hash = hex64(h);
    const auto cb_path = codebook_path(cfg.out_dir);
    const auto existing = dsp::peek_feature_cache(cb_path);
    if (existing && existing->source_hash == cb_hash) {
      const auto cache = dsp::read_feature_cache(cb_path);
      codebook = dsp::BoawCodebook{cache.header.rows, cache.header.cols, cache.matrix()};
    } else {
      // Every 4th frame of every readable clip.
      std::vector<double> pts;
      std::size_t rows = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!readable[i]) continue;
        const auto mel = dsp::mel_spectrogram(*clips[i]);
        for (std::size_t f = 0; f < mel.n_frames(); f += 4, ++rows)
          pts.insert(pts.end(), mel.frames.row(f).begin(), mel.frames.row(f).end());
      }
      Matrix<double> data(rows, dsp::kMelBands);
      data.values() = std::move(pts);
      codebook = dsp::kmeans_fit(data, cfg.codebook_size, 50, cfg.seed).codebook;
      dsp::FeatureCacheHeader hdr{"codebook", dsp::FeatureKind::Boaw, codebook->k, codebook->dim,
                                  dsp::kFeatureCacheVersion, cb_hash};
      dsp::write_feature_cache(cb_path, hdr, codebook->centroids.values());
    }
    param_key += ";codebook=" + cb_hash;
  }

  FeaturizeResult result;
  std::vector<char> computed(n, 0);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    if (!readable[i]) return;
    const auto& row = manifest.rows[i];
    const std::string source = hex64(hash_string(param_key, audio_hash[i]));
    const auto path = feature_path(cfg.out_dir, row.id, cfg.kind);
    if (const auto hdr = dsp::peek_feature_cache(path); hdr && hdr->source_hash == source && hdr->id == row.id) return;
    const auto feats = compute_features(*clips[i], cfg.kind, codebook ? &*codebook : nullptr);
    dsp::FeatureCacheHeader hdr{row.id, cfg.kind, feats.rows(), feats.cols(), dsp::kFeatureCacheVersion, source};
    dsp::write_feature_cache(path, hdr, feats.values());
    computed[i] = 1;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!readable[i]) result.failed.push_back(manifest.rows[i].id);
    else if (computed[i]) ++result.computed;
    else ++result.skipped;
  }
  return result;
}

std::string_view model_kind_key(ModelKind kind) { return kind == ModelKind::Svm ? "svm" : "cnn"; }

std::optional<ModelKind> model_kind_from_key(std::string_view key) {
  if (key == "svm") return ModelKind::Svm;
  if (key == "cnn") return ModelKind::Cnn;
  return std::nullopt;
}

TrainCommandResult cmd_train(const TrainCommandConfig& cfg) {
  const Manifest manifest = load_manifest(cfg.manifest);
  require(!manifest.rows.empty(), ErrorCode::InsufficientData, "manifest is empty");
  TrainCommandResult result;
  result.split = cfg.split_file ? eval::parse_split(read_text(*cfg.split_file))
                                : eval::stratified_split(manifest, {}, cfg.split_seed);
  for (const auto* ids : {&result.split.train_ids, &result.split.val_ids, &result.split.test_ids})
    for (const auto& id : *ids) row_for(manifest, id);
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir / "split.json", eval::serialize_split(result.split));
  result.checkpoint = cfg.out_dir / "model.gsbw";
  const std::string dataset_hash = hex64(manifest_hash(manifest));

  ordered_json meta;
  if (cfg.model == ModelKind::Cnn) {
    const auto train = load_cnn_set(manifest, cfg.features, result.split.train_ids);
    const auto val = load_cnn_set(manifest, cfg.features, result.split.val_ids);
    auto trained = models::cnn_train(train, val, cfg.cnn, checkpoint_writer(result.checkpoint));
    nn::save_checkpoint(result.checkpoint, trained.model.tensors());
    ordered_json hist;
    hist["epochs"] = ordered_json::array();
    for (const auto& e : trained.history.epochs)
      hist["epochs"].push_back(
          {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"improved", e.improved}});
    hist["best_epoch"] = trained.history.best_epoch;
    hist["best_val_loss"] = trained.history.best_val_loss;
    hist["checksum"] = hex64(trained.model.checksum());
    write_text(cfg.out_dir / "history.json", hist.dump(2) + "\n");
    result.history = trained.history;
    meta = model_metadata(cfg.model, dsp::FeatureKind::Mel, cfg.threshold, dataset_hash, result.split.seed,
                          train_config_json(cfg.cnn), cfg.cnn.input_frames);
  } else {
    const Matrix<double> x = load_rows(cfg.features, result.split.train_ids, cfg.svm_feature);
    std::vector<int> labels;
    for (const auto& id : result.split.train_ids) labels.push_back(label_of(row_for(manifest, id)));
    const auto model = models::svm_train(x, labels, kNumClasses, cfg.svm, cfg.svm_feature);
    nn::save_checkpoint(result.checkpoint, model.tensors());
    meta = model_metadata(cfg.model, cfg.svm_feature, cfg.threshold, dataset_hash, result.split.seed,
                          svm_config_json(cfg.svm), 0);
  }
  write_text(cfg.out_dir / "model.json", meta.dump(2) + "\n");
  return result;
}

LoadedModel load_model(const fs::path& checkpoint) {
  const auto sidecar = fs::path(checkpoint).replace_extension(".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(sidecar));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptFile, "bad model metadata " + sidecar.string() + ": " + e.what());
  }
  LoadedModel m;
  try {
    const auto kind = model_kind_from_key(meta.at("model").get<std::string>());
    const auto feature = dsp::feature_kind_from_key(meta.at("feature_kind").get<std::string>());
    require(kind && feature, ErrorCode::CorruptFile, "unknown model or feature kind in " + sidecar.string());
    m.kind = *kind;
    m.feature = *feature;
    m.threshold = meta.at("threshold").get<double>();
    m.dataset_hash = meta.at("dataset_hash").get<std::string>();
    for (const auto& key : {"model", "architecture", "architecture_hash", "feature_kind", "dataset_hash"})
      m.metadata[key] = meta.at(key).get<std::string>();
    m.metadata["threshold"] = meta.at("threshold").dump();
    m.metadata["split_seed"] = meta.at("split_seed").dump();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptFile, "bad model metadata " + sidecar.string() + ": " + e.what());
  }
  const auto tensors = nn::load_checkpoint(checkpoint);
  if (m.kind == ModelKind::Cnn) m.cnn = models::JointCnnModel::from_tensors(tensors);
  else m.svm = models::SvmModel::from_tensors(tensors);
  return m;
}

std::vector<eval::EvalExample> run_model(const LoadedModel& model, const Manifest& manifest, const fs::path& features,
                                         const std::vector<std::string>& ids, double threshold) {
  std::vector<eval::EvalExample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    eval::EvalExample e;
    e.id = id;
    e.true_class = label_of(row_for(manifest, id));
    if (model.kind == ModelKind::Cnn) {
      const auto mel = load_cache(features, id, dsp::FeatureKind::Mel).matrix();
      const auto pred = models::cnn_forward(*model.cnn, mel, threshold);
      e.p_gunshot = pred.p_gunshot;
      e.detected = pred.detected;
      e.type_scores = pred.type_posteriors;
    } else {
      const auto x = load_cache(features, id, model.feature).vector();
      const auto pred = models::svm_predict(*model.svm, x);
      e.p_gunshot = std::isinf(pred.detection_score) ? 1.0 : sigmoid(pred.detection_score);
      e.detected = e.p_gunshot >= threshold;
      const double mx = *std::max_element(pred.scores.begin(), pred.scores.end());
      double total = 0.0;
      for (std::size_t c = 0; c < kNumClasses; ++c) total += (e.type_scores[c] = std::exp(pred.scores[c] - mx));
      for (auto& s : e.type_scores) s /= total;
    }
    out.push_back(std::move(e));
  }
  return out;
}

eval::EvalReport cmd_evaluate(const EvaluateConfig& cfg) {
  const LoadedModel model = load_model(cfg.checkpoint);
  const Manifest manifest = load_manifest(cfg.manifest);
  const std::string dataset_hash = hex64(manifest_hash(manifest));
  std::vector<std::string> ids;
  std::uint64_t split_seed = 0;
  std::string split_name = "all";
  if (cfg.split_file) {
    const auto split = eval::parse_split(read_text(*cfg.split_file));
    split_seed = split.seed;
    split_name = cfg.split_name;
    if (cfg.split_name == "train") ids = split.train_ids;
    else if (cfg.split_name == "val") ids = split.val_ids;
    else if (cfg.split_name == "test") ids = split.test_ids;
    else fail(ErrorCode::InvalidParam, "unknown split '" + cfg.split_name + "' (expected train, val or test)");
  } else {
    for (const auto& r : manifest.rows) ids.push_back(r.id);
  }
  const double threshold = cfg.threshold.value_or(model.threshold);
  const auto examples = run_model(model, manifest, cfg.features, ids, threshold);

  auto report = eval::build_report(examples);
  report.dataset_hash = dataset_hash;
  report.split_seed = split_seed;
  report.split_name = split_name;
  report.model = model.metadata;
  char thr[32];
  std::snprintf(thr, sizeof thr, "%.17g", threshold);
  report.config = {{"threshold", thr}, {"split", split_name}};

  if (split_name == "train") report.warnings.insert(report.warnings.begin(), "evaluating on the training split");
  const auto train_split = cfg.checkpoint.parent_path() / "split.json";
  if (model.dataset_hash == dataset_hash && fs::exists(train_split)) {
    const auto trained_on = eval::parse_split(read_text(train_split)).train_ids;
    const std::set<std::string> train_set(trained_on.begin(), trained_on.end());
    const auto overlap = std::count_if(ids.begin(), ids.end(), [&](const auto& id) { return train_set.contains(id); });
    if (overlap > 0)
      report.warnings.insert(report.warnings.begin(),
                             "evaluation set overlaps the model's training data (" + std::to_string(overlap) + " clips)");
  }
  fs::create_directories(cfg.out_dir);
  eval::emit_report(report, cfg.out_dir / "report.txt", eval::ReportFormat::TextTable);
  eval::emit_report(report, cfg.out_dir / "report.json", eval::ReportFormat::RecordFile);
  return report;
}

std::map<std::string, double> headline_metrics(const eval::EvalReport& r) {
  return {{"detection_f1", r.detection.at(0).f1},
          {"overall_macro_f1", eval::macro_f1(r.overall)},
          {"overall_unthresholded_macro_f1", eval::macro_f1(r.overall_unthresholded)},
          {"relevant_macro_f1", eval::macro_f1(r.relevant)},
          {"map", r.map}};
}

CrossvalResult cmd_crossval(const CrossvalConfig& cfg) {
  const Manifest manifest = load_manifest(cfg.manifest);
  std::vector<std::string> all;
  for (const auto& r : manifest.rows) all.push_back(r.id);
  const auto plan = eval::kfold(manifest, all, cfg.k, cfg.seed);
  const std::string dataset_hash = hex64(manifest_hash(manifest));
  fs::create_directories(cfg.out_dir);

  CrossvalResult result;
  for (std::size_t i = 0; i < cfg.k; ++i) {
    const auto& test = plan.folds[i];
    std::set<std::string> held(test.begin(), test.end());
    std::vector<std::string> val;
    if (cfg.model == ModelKind::Cnn) {
      val = plan.folds[(i + 1) % cfg.k];
      held.insert(val.begin(), val.end());
    }
    const auto train = select_ids(manifest, held);

    LoadedModel model = trained_model(cfg.model, cfg.model == ModelKind::Cnn ? dsp::FeatureKind::Mel : cfg.svm_feature,
                                      cfg.threshold, dataset_hash);
    if (cfg.model == ModelKind::Cnn) {
      auto tc = cfg.cnn;
      tc.seed = splitmix64(cfg.cnn.seed + i);
      model.cnn = models::cnn_train(load_cnn_set(manifest, cfg.features, train),
                                    load_cnn_set(manifest, cfg.features, val), tc)
                      .model;
    } else {
      std::vector<int> labels;
      for (const auto& id : train) labels.push_back(label_of(row_for(manifest, id)));
      model.svm = models::svm_train(load_rows(cfg.features, train, cfg.svm_feature), labels, kNumClasses, cfg.svm,
                                    cfg.svm_feature);
    }
    auto report = eval::build_report(run_model(model, manifest, cfg.features, test, cfg.threshold));
    report.dataset_hash = dataset_hash;
    report.split_seed = cfg.seed;
    report.split_name = "fold_" + std::to_string(i);
    report.model = {{"model", std::string(model_kind_key(cfg.model))},
                    {"feature_kind", std::string(dsp::feature_kind_key(model.feature))}};
    const auto dir = cfg.out_dir / ("fold_" + std::to_string(i));
    fs::create_directories(dir);
    eval::emit_report(report, dir / "report.txt", eval::ReportFormat::TextTable);
    eval::emit_report(report, dir / "report.json", eval::ReportFormat::RecordFile);
    for (const auto& [name, v] : headline_metrics(report)) result.per_fold[name].push_back(v);
    result.folds.push_back(std::move(report));
  }

  ordered_json j;
  j["version"] = 1;
  j["k"] = cfg.k;
  j["seed"] = cfg.seed;
  j["model"] = model_kind_key(cfg.model);
  j["fold_sizes"] = ordered_json::array();
  for (const auto& f : plan.folds) j["fold_sizes"].push_back(f.size());
  for (const auto& [name, values] : result.per_fold) {
    MetricSummary s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(s.stddev / static_cast<double>(values.size()));
    result.aggregate[name] = s;
    j["metrics"][name] = {{"folds", values}, {"mean", s.mean}, {"std", s.stddev}};
  }
  write_text(cfg.out_dir / "crossval.json", j.dump(2) + "\n");
  return result;
}

}  // namespace gsb::pipeline
