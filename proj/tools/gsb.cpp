// gsb: generate synthetic gunshot datasets, extract features, train and
// evaluate the SVM and CNN classifiers.

#include "gsb/pipeline/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace gsb;
using namespace gsb::pipeline;

namespace {

void echo_config(const CLI::App& app, const fs::path& out_dir, const std::string& command) {
  fs::create_directories(out_dir);
  const auto path = out_dir / (command + ".config.toml");
  std::ofstream f(path, std::ios::binary);
  // Only the active subcommand, under its own section so --config selects it.
  f << "[" << command << "]\n" << app.get_subcommand(command)->config_to_str(true, false);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

std::vector<int> parse_counts(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) out.push_back(std::stoi(tok));
  return out;
}

struct TrainOptions {
  models::TrainConfig cnn;
  models::SvmConfig svm;
  std::string model = "cnn";
  std::string svm_feature = "melstats";
  double threshold = 0.5;
};

void add_train_options(CLI::App* sub, TrainOptions& o) {
  sub->add_option("--model", o.model, "Classifier")->check(CLI::IsMember({"cnn", "svm"}))->capture_default_str();
  sub->add_option("--svm-feature", o.svm_feature, "Feature kind used by the SVM")
      ->check(CLI::IsMember({"melstats", "boaw", "autocorr"}))
      ->capture_default_str();
  sub->add_option("--epochs", o.cnn.epochs, "CNN epochs")->capture_default_str();
  sub->add_option("--batch-size", o.cnn.batch_size, "CNN minibatch size")->capture_default_str();
  sub->add_option("--lr", o.cnn.lr, "SGD learning rate")->capture_default_str();
  sub->add_option("--momentum", o.cnn.momentum, "SGD momentum")->capture_default_str();
  sub->add_option("--lambda-type", o.cnn.lambda_type, "Weight of the gun-type loss")->capture_default_str();
  sub->add_option("--patience", o.cnn.patience, "Early-stopping patience in epochs")->capture_default_str();
  sub->add_option("--frames", o.cnn.input_frames, "CNN input frames (crop/pad)")->capture_default_str();
  sub->add_option("--C", o.svm.C, "SVM regularisation constant")->capture_default_str();
  sub->add_option("--svm-epochs", o.svm.epochs, "Maximum SVM passes")->capture_default_str();
  sub->add_option("--threshold", o.threshold, "Detection threshold")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic gunshot detection and gun-type classification benchmark"};
  app.set_config("--config", "", "Read options from a TOML file (e.g. a config echo)");
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  try {
    seed = default_seed();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  // generate
  auto* gen = app.add_subcommand("generate", "Synthesise a labelled dataset")->configurable();
  GenerateConfig gcfg;
  std::string preset = "paper-ratio", counts;
  double scale = 0.05;
  int per_class = 100;
  bool noisy = false;
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--preset", preset, "Class-count preset")->check(CLI::IsMember({"paper-ratio", "uniform"}))->capture_default_str();
  gen->add_option("--scale", scale, "Scale of the paper-ratio preset")->capture_default_str();
  gen->add_option("--per-class", per_class, "Clips per class for the uniform preset")->capture_default_str();
  gen->add_option("--counts", counts, "Explicit per-class counts r,smg,hg,mg,sg (overrides the preset)");
  gen->add_option("--negatives", gcfg.negatives, "No-gunshot clips")->capture_default_str();
  gen->add_flag("--noisy", noisy, "Low SNR, reverb and distance instead of clean recordings");
  gen->add_option("--seed", seed, "Dataset seed (default from GSB_SEED)")->capture_default_str();
  gen->add_option("--duration", gcfg.clip_duration_s, "Clip duration in seconds")->capture_default_str();
  gen->add_option("--jobs", gcfg.jobs, "Worker threads")->capture_default_str();

  // featurize
  auto* feat = app.add_subcommand("featurize", "Extract per-clip feature caches")->configurable();
  FeaturizeConfig fcfg;
  std::string feat_manifest, feat_out, kind = "mel";
  feat->add_option("--manifest", feat_manifest, "manifest.jsonl")->required();
  feat->add_option("--kind", kind, "Feature kind")->check(CLI::IsMember({"mel", "melstats", "boaw", "autocorr"}))->capture_default_str();
  feat->add_option("--out", feat_out, "Feature directory")->required();
  feat->add_option("--codebook-size", fcfg.codebook_size, "BoAW codebook size")->capture_default_str();
  feat->add_option("--seed", seed, "k-means seed (default from GSB_SEED)")->capture_default_str();
  feat->add_option("--jobs", fcfg.jobs, "Worker threads")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a classifier on a stratified split")->configurable();
  TrainOptions topt;
  std::string train_manifest, train_features, train_out, split_file;
  train->add_option("--manifest", train_manifest, "manifest.jsonl")->required();
  train->add_option("--features", train_features, "Feature directory")->required();
  train->add_option("--out", train_out, "Model directory")->required();
  train->add_option("--split", split_file, "Existing split.json to reuse");
  train->add_option("--seed", seed, "Seed for split, init and shuffling (default from GSB_SEED)")->capture_default_str();
  add_train_options(train, topt);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a trained model and write reports")->configurable();
  EvaluateConfig ecfg;
  std::string eval_ckpt, eval_manifest, eval_features, eval_split, eval_out;
  double eval_threshold = -1.0;
  evaluate->add_option("--checkpoint", eval_ckpt, "model.gsbw")->required();
  evaluate->add_option("--manifest", eval_manifest, "manifest.jsonl")->required();
  evaluate->add_option("--features", eval_features, "Feature directory")->required();
  evaluate->add_option("--split", eval_split, "split.json (evaluate all rows when omitted)");
  evaluate->add_option("--split-name", ecfg.split_name, "Partition to evaluate")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  evaluate->add_option("--out", eval_out, "Report directory")->required();
  evaluate->add_option("--threshold", eval_threshold, "Detection threshold (negative: use the model's)")->capture_default_str();

  // crossval
  auto* cv = app.add_subcommand("crossval", "k-fold cross-validation")->configurable();
  TrainOptions copt;
  CrossvalConfig ccfg;
  std::string cv_manifest, cv_features, cv_out;
  cv->add_option("--manifest", cv_manifest, "manifest.jsonl")->required();
  cv->add_option("--features", cv_features, "Feature directory")->required();
  cv->add_option("--out", cv_out, "Output directory")->required();
  cv->add_option("--k", ccfg.k, "Number of folds")->capture_default_str();
  cv->add_option("--seed", seed, "Seed (default from GSB_SEED)")->capture_default_str();
  add_train_options(cv, copt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      gcfg.out_dir = gen_out;
      gcfg.seed = seed;
      gcfg.clean = !noisy;
      if (!counts.empty()) {
        const auto c = parse_counts(counts);
        if (c.size() != kNumClasses) throw Error(ErrorCode::InvalidParam, "--counts needs 5 comma-separated values");
        std::copy(c.begin(), c.end(), gcfg.class_counts.begin());
      } else {
        gcfg.class_counts = preset_counts(preset, scale, per_class);
      }
      echo_config(app, gcfg.out_dir, "generate");
      const auto res = cmd_generate(gcfg);
      std::printf("%-18s %s\n", "Class", "Clips");
      for (std::size_t c = 0; c < kNumClasses; ++c)
        std::printf("%-18s %zu\n", std::string(class_name(kAllClasses[c])).c_str(), res.histogram[c]);
      std::printf("%-18s %zu\n%-18s %zu\n", "No gunshot", res.negatives, "Total", res.manifest.rows.size());
    } else if (*feat) {
      fcfg.manifest = feat_manifest;
      fcfg.out_dir = feat_out;
      fcfg.kind = *dsp::feature_kind_from_key(kind);
      fcfg.seed = seed;
      echo_config(app, fcfg.out_dir, "featurize");
      const auto res = cmd_featurize(fcfg);
      std::printf("computed %zu, up to date %zu, failed %zu\n", res.computed, res.skipped, res.failed.size());
      for (const auto& id : res.failed) std::fprintf(stderr, "failed: %s (unreadable audio)\n", id.c_str());
      if (!res.failed.empty()) return kExitIo;
    } else if (*train) {
      TrainCommandConfig cfg;
      cfg.manifest = train_manifest;
      cfg.features = train_features;
      cfg.out_dir = train_out;
      if (!split_file.empty()) cfg.split_file = split_file;
      cfg.model = *model_kind_from_key(topt.model);
      cfg.svm_feature = *dsp::feature_kind_from_key(topt.svm_feature);
      cfg.split_seed = seed;
      cfg.cnn = topt.cnn;
      cfg.cnn.seed = seed;
      cfg.svm = topt.svm;
      cfg.svm.seed = seed;
      cfg.threshold = topt.threshold;
      echo_config(app, cfg.out_dir, "train");
      const auto res = cmd_train(cfg);
      std::printf("split: %zu train / %zu val / %zu test\n", res.split.train_ids.size(), res.split.val_ids.size(),
                  res.split.test_ids.size());
      if (res.history)
        std::printf("best epoch %zu of %zu, val loss %.4f\n", res.history->best_epoch, res.history->epochs.size(),
                    res.history->best_val_loss);
      std::printf("checkpoint: %s\n", res.checkpoint.string().c_str());
    } else if (*evaluate) {
      ecfg.checkpoint = eval_ckpt;
      ecfg.manifest = eval_manifest;
      ecfg.features = eval_features;
      if (!eval_split.empty()) ecfg.split_file = eval_split;
      ecfg.out_dir = eval_out;
      if (eval_threshold >= 0.0) ecfg.threshold = eval_threshold;
      echo_config(app, ecfg.out_dir, "evaluate");
      const auto report = cmd_evaluate(ecfg);
      std::fputs(eval::report_text(report).c_str(), stdout);
      for (const auto& w : report.warnings)
        if (w.starts_with("evaluat")) std::fprintf(stderr, "warning: %s\n", w.c_str());
    } else if (*cv) {
      ccfg.manifest = cv_manifest;
      ccfg.features = cv_features;
      ccfg.out_dir = cv_out;
      ccfg.seed = seed;
      ccfg.model = *model_kind_from_key(copt.model);
      ccfg.svm_feature = *dsp::feature_kind_from_key(copt.svm_feature);
      ccfg.cnn = copt.cnn;
      ccfg.cnn.seed = seed;
      ccfg.svm = copt.svm;
      ccfg.svm.seed = seed;
      ccfg.threshold = copt.threshold;
      echo_config(app, ccfg.out_dir, "crossval");
      const auto res = cmd_crossval(ccfg);
      for (const auto& [name, s] : res.aggregate) std::printf("%-32s %.4f +- %.4f\n", name.c_str(), s.mean, s.stddev);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitOk;
}
