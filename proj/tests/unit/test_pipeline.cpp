#include "gsb/dsp/feature_cache.hpp"
#include "gsb/eval/report.hpp"
#include "gsb/manifest.hpp"
#include "gsb/pipeline/pipeline.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace gsb;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Run gsb_cli(const std::string& args, const std::string& env = "") {
  static oracle::TempDir logs("cli_logs");
  static int n = 0;
  const auto out = logs / ("out" + std::to_string(n) + ".txt");
  const auto err = logs / ("err" + std::to_string(n++) + ".txt");
  const std::string cmd =
      env + " '" + std::string(GSB_CLI_PATH) + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read(out);
  r.err = read(err);
  return r;
}

// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read(e.path());
  return files;
}

// Paths whose bytes differ between two trees, or that exist in only one.
std::vector<std::string> tree_diff(const std::map<std::string, std::string>& a,
                                   const std::map<std::string, std::string>& b) {
  std::vector<std::string> out;
  for (const auto& [k, v] : a)
    if (auto it = b.find(k); it == b.end() || it->second != v) out.push_back(k);
  for (const auto& [k, v] : b)
    if (!a.count(k)) out.push_back(k);
  return out;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Generated once per binary: 6 clips per class plus 6 negatives, 0.4 s each.
const fs::path& small_dataset() {
  static oracle::TempDir dir("pipe_data");
  static const bool ready = [] {
    const auto r = gsb_cli("generate --out " + q(dir / "data") + " --counts 6,6,6,6,6 --negatives 6 --duration 0.4 --seed 3");
    EXPECT_EQ(r.code, 0) << r.err;
    return true;
  }();
  (void)ready;
  return dir.path();
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(gsb_cli("").code, 2);
  EXPECT_EQ(gsb_cli("frobnicate").code, 2);
  EXPECT_EQ(gsb_cli("generate").code, 2);
  oracle::TempDir dir("usage");
  EXPECT_EQ(gsb_cli("generate --out " + q(dir / "x") + " --preset nope").code, 2);
  EXPECT_EQ(gsb_cli("generate --out " + q(dir / "x") + " --scale -1").code, 2);
  EXPECT_EQ(gsb_cli("generate --out " + q(dir / "x"), "GSB_SEED=banana").code, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(gsb_cli("--help").code, 0); }

TEST(Cli, ZeroCountsGiveEmptyManifest) {
  oracle::TempDir dir("empty");
  const auto r = gsb_cli("generate --out " + q(dir / "d") + " --counts 0,0,0,0,0 --negatives 0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read(dir / "d/manifest.jsonl"), "");
  EXPECT_NE(r.out.find("Total"), std::string::npos);
}

TEST(Cli, PaperRatioPresetAtFivePercent) {
  oracle::TempDir dir("ratio");
  const auto r = gsb_cli("generate --out " + q(dir / "d") + " --preset paper-ratio --scale 0.05 --duration 0.3 --seed 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = load_manifest(dir / "d/manifest.jsonl");
  EXPECT_EQ(m.rows.size(), 173u);
  std::array<int, kNumClasses> hist{};
  for (const auto& row : m.rows) ++hist[std::size_t(class_index(*row.cls))];
  EXPECT_EQ(hist, (std::array<int, kNumClasses>{45, 26, 55, 27, 20}));
}

TEST(Cli, SameSeedSameTree) {
  oracle::TempDir dir("seed7");
  // Both runs write to the same path because the config echo records it.
  std::vector<std::map<std::string, std::string>> trees;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(dir / "d");
    const auto r = gsb_cli("generate --out " + q(dir / "d") + " --counts 2,2,2,2,2 --negatives 2 --seed 7");
    ASSERT_EQ(r.code, 0) << r.err;
    trees.push_back(tree(dir / "d"));
  }
  EXPECT_TRUE(tree_diff(trees[0], trees[1]).empty()) << ::testing::PrintToString(tree_diff(trees[0], trees[1]));
  EXPECT_EQ(trees[0].size(), 12u + 2u);  // clips, manifest, config echo
}

TEST(Cli, GsbSeedEnvironmentDefault) {
  oracle::TempDir dir("envseed");
  ASSERT_EQ(gsb_cli("generate --out " + q(dir / "a") + " --counts 1,1,1,1,1", "GSB_SEED=11").code, 0);
  ASSERT_EQ(gsb_cli("generate --out " + q(dir / "b") + " --counts 1,1,1,1,1 --seed 11").code, 0);
  EXPECT_EQ(read(dir / "a/manifest.jsonl"), read(dir / "b/manifest.jsonl"));
  EXPECT_NE(read(dir / "a/generate.config.toml").find("seed=11"), std::string::npos);
}

TEST(Cli, FeaturizeCachesAndSkips) {
  oracle::TempDir dir("feat");
  ASSERT_EQ(gsb_cli("generate --out " + q(dir / "d") + " --counts 1,1,0,0,0 --seed 4").code, 0);
  auto r = gsb_cli("featurize --manifest " + q(dir / "d/manifest.jsonl") + " --kind mel --out " + q(dir / "f"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("computed 2"), std::string::npos) << r.out;
  const auto cache = dsp::read_feature_cache(pipeline::feature_path(dir / "f", "clip_00000", dsp::FeatureKind::Mel));
  EXPECT_EQ(cache.header.rows, 128u);
  EXPECT_EQ(cache.header.cols, 128u);
  r = gsb_cli("featurize --manifest " + q(dir / "d/manifest.jsonl") + " --kind mel --out " + q(dir / "f"));
  EXPECT_NE(r.out.find("computed 0, up to date 2"), std::string::npos) << r.out;
  EXPECT_EQ(gsb_cli("featurize --manifest " + q(dir / "d/manifest.jsonl") + " --kind mfcc --out " + q(dir / "f")).code, 2);
}

TEST(Cli, CorruptWavIsFlaggedAndOthersContinue) {
  oracle::TempDir dir("corrupt");
  ASSERT_EQ(gsb_cli("generate --out " + q(dir / "d") + " --counts 1,1,1,0,0 --seed 4").code, 0);
  {
    std::ofstream f(dir / "d/audio/clip_00001.wav", std::ios::binary | std::ios::trunc);
    f << "RIFF";
  }
  const auto r = gsb_cli("featurize --manifest " + q(dir / "d/manifest.jsonl") + " --kind melstats --out " + q(dir / "f"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("computed 2"), std::string::npos) << r.out;
  EXPECT_NE(r.err.find("clip_00001"), std::string::npos);
}

TEST(Cli, MissingInputs) {
  oracle::TempDir dir("missing");
  EXPECT_EQ(gsb_cli("featurize --manifest " + q(dir / "nope.jsonl") + " --out " + q(dir / "f")).code, 3);
  const auto& data = small_dataset();
  // Features were never extracted into this directory.
  EXPECT_EQ(gsb_cli("train --manifest " + q(data / "data/manifest.jsonl") + " --features " + q(dir / "none") +
                    " --out " + q(dir / "m") + " --model svm")
                .code,
            2);
}

TEST(Cli, SvmTrainEvaluateAndLeakageWarning) {
  const auto& data = small_dataset();
  oracle::TempDir dir("svm");
  const auto m = q(data / "data/manifest.jsonl");
  ASSERT_EQ(gsb_cli("featurize --manifest " + m + " --kind melstats --out " + q(dir / "f")).code, 0);
  auto r = gsb_cli("train --manifest " + m + " --features " + q(dir / "f") + " --out " + q(dir / "m") + " --model svm");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"model.gsbw", "model.json", "split.json", "train.config.toml"}) EXPECT_TRUE(fs::exists(dir / "m" / f)) << f;

  const std::string eval_base = "evaluate --checkpoint " + q(dir / "m/model.gsbw") + " --manifest " + m + " --features " +
                                q(dir / "f") + " --split " + q(dir / "m/split.json");
  r = gsb_cli(eval_base + " --split-name test --out " + q(dir / "test"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = eval::parse_report(read(dir / "test/report.json"));
  EXPECT_EQ(report.split_name, "test");
  EXPECT_EQ(report.examples, 6u);
  EXPECT_EQ(report.detection.size(), 2u);
  EXPECT_EQ(report.overall.size(), std::size_t(kNumClasses));
  EXPECT_TRUE(report.warnings.empty() || report.warnings[0].find("overlap") == std::string::npos);
  const auto text = read(dir / "test/report.txt");
  for (auto c : kAllClasses) EXPECT_NE(text.find(std::string(class_name(c))), std::string::npos);

  r = gsb_cli(eval_base + " --split-name train --out " + q(dir / "train"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const auto leaky = eval::parse_report(read(dir / "train/report.json"));
  ASSERT_FALSE(leaky.warnings.empty());
  EXPECT_NE(leaky.warnings[0].find("overlap"), std::string::npos);
}

TEST(Cli, ConfigEchoReproducesOutputs) {
  const auto& data = small_dataset();
  oracle::TempDir dir("echo");
  const auto m = q(data / "data/manifest.jsonl");
  ASSERT_EQ(gsb_cli("featurize --manifest " + m + " --kind mel --out " + q(dir / "f")).code, 0);
  const std::string args = "train --manifest " + m + " --features " + q(dir / "f") + " --out " + q(dir / "m") +
                           " --model cnn --epochs 2 --frames 32 --batch-size 8 --seed 5";
  ASSERT_EQ(gsb_cli(args).code, 0);
  const auto first = tree(dir / "m");
  fs::rename(dir / "m/train.config.toml", dir / "train.config.toml");
  fs::remove_all(dir / "m");
  const auto r = gsb_cli("--config " + q(dir / "train.config.toml"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(tree_diff(tree(dir / "m"), first).empty()) << ::testing::PrintToString(tree_diff(tree(dir / "m"), first));
  const auto hist = nlohmann::json::parse(read(dir / "m/history.json"));
  EXPECT_EQ(hist["epochs"].size(), 2u);
}

TEST(Cli, DivergentTrainingExitsFour) {
  const auto& data = small_dataset();
  oracle::TempDir dir("diverge");
  const auto m = q(data / "data/manifest.jsonl");
  ASSERT_EQ(gsb_cli("featurize --manifest " + m + " --kind mel --out " + q(dir / "f")).code, 0);
  const auto r = gsb_cli("train --manifest " + m + " --features " + q(dir / "f") + " --out " + q(dir / "m") +
                         " --model cnn --epochs 3 --frames 16 --lr 1e200 --momentum 0");
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST(Cli, CrossvalFoldsAndAggregate) {
  oracle::TempDir dir("cv");
  ASSERT_EQ(gsb_cli("generate --out " + q(dir / "d") + " --counts 4,4,4,4,4 --negatives 0 --duration 0.3 --seed 8").code, 0);
  const auto m = q(dir / "d/manifest.jsonl");
  ASSERT_EQ(gsb_cli("featurize --manifest " + m + " --kind melstats --out " + q(dir / "f")).code, 0);
  const auto r = gsb_cli("crossval --manifest " + m + " --features " + q(dir / "f") + " --out " + q(dir / "cv") +
                         " --model svm --k 5 --seed 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read(dir / "cv/crossval.json"));
  EXPECT_EQ(j["fold_sizes"], nlohmann::json::array({4, 4, 4, 4, 4}));
  double sum = 0;
  for (int i = 0; i < 5; ++i) {
    const auto rep = eval::parse_report(read(dir / ("cv/fold_" + std::to_string(i)) / "report.json"));
    EXPECT_EQ(rep.examples, 4u);
    sum += rep.map;
  }
  EXPECT_NEAR(j["metrics"]["map"]["mean"].get<double>(), sum / 5, 1e-12);
  const auto again = gsb_cli("crossval --manifest " + m + " --features " + q(dir / "f") + " --out " + q(dir / "cv2") +
                             " --model svm --k 5 --seed 2");
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(read(dir / "cv/crossval.json"), read(dir / "cv2/crossval.json"));
}
