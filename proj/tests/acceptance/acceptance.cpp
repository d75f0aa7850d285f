// Acceptance run: one PASS/FAIL line per criterion at the pinned tolerances.
// Exit status is nonzero when any criterion fails.

#include "gsb/dsp/fft.hpp"
#include "gsb/dsp/spectral.hpp"
#include "gsb/eval/metrics.hpp"
#include "gsb/eval/report.hpp"
#include "gsb/nn/ops.hpp"
#include "gsb/nn/tape.hpp"
#include "gsb/pipeline/pipeline.hpp"
#include "gsb/rng.hpp"
#include "gsb/synth/synthgun.hpp"

#include "gradcheck.hpp"
#include "nn_oracles.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

using namespace gsb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ------------------------------------------------------------ 1: gradients

Outcome gradients() {
  const auto t0 = Clock::now();
  Rng rng(100);
  std::map<std::string, int> per_op;
  std::map<std::string, double> worst;
  for (const auto& c : gradcheck::standard_cases(42)) {
    const auto r = gradcheck::check(c.op, c.inputs, rng, 1e-3);
    ++per_op[c.name];
    worst[c.name] = std::max(worst[c.name], r.max_rel_error);
  }
  const double elapsed = seconds_since(t0);
  double max_err = 0;
  int min_shapes = 1 << 30;
  std::string worst_op;
  for (const auto& [name, e] : worst)
    if (e >= max_err) max_err = e, worst_op = name;
  for (const auto& [name, n] : per_op) min_shapes = std::min(min_shapes, n);
  return {max_err < 1e-4 && min_shapes >= 20 && elapsed < 60.0,
          fmt("%zu ops, >=%d shapes each, max rel err %.2e (%s), %.1f s", per_op.size(), min_shapes, max_err,
              worst_op.c_str(), elapsed)};
}

// ------------------------------------------------------------ 2: DSP oracles

Outcome dsp_oracles() {
  Rng rng(200);
  double conv_err = 0, dense_err = 0, fft_err = 0, parseval_err = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = std::size_t(rng.uniform_int(1, 3)), stride = std::size_t(rng.uniform_int(1, 2)),
                      pad = std::size_t(rng.uniform_int(0, 1));
    const std::size_t h = k + std::size_t(rng.uniform_int(0, 6)), w = k + std::size_t(rng.uniform_int(0, 6));
    const auto x = gradcheck::random_tensor({std::size_t(rng.uniform_int(1, 3)), 2, h, w}, rng);
    const auto wt = gradcheck::random_tensor({3, 2, k, k}, rng);
    const auto b = gradcheck::random_tensor({3}, rng);
    nn::Tape tape;
    const auto y = nn::conv2d(tape.constant(x), tape.constant(wt), tape.constant(b), stride, pad).value();
    const auto ref = oracle::naive_conv(x, wt, b, stride, pad);
    for (std::size_t i = 0; i < y.size(); ++i) conv_err = std::max(conv_err, std::abs(y[i] - ref[i]));

    const std::size_t bn = std::size_t(rng.uniform_int(1, 8)), n = std::size_t(rng.uniform_int(1, 20)),
                      m = std::size_t(rng.uniform_int(1, 20));
    const auto dx = gradcheck::random_tensor({bn, n}, rng), dw = gradcheck::random_tensor({m, n}, rng),
               db = gradcheck::random_tensor({m}, rng);
    const auto dy = nn::dense(tape.constant(dx), tape.constant(dw), tape.constant(db)).value();
    const auto dref = oracle::naive_dense(dx, dw, db);
    for (std::size_t i = 0; i < dy.size(); ++i) dense_err = std::max(dense_err, std::abs(dy[i] - dref[i]));
  }
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<dsp::Complex> x(1024);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    auto y = x;
    dsp::fft_inplace(y);
    dsp::fft_inplace(y, true);
    for (std::size_t i = 0; i < x.size(); ++i) fft_err = std::max(fft_err, std::abs(y[i] - x[i]));

    AudioClip clip;
    clip.samples.resize(1024);
    for (double& s : clip.samples) s = rng.normal() * 0.3;
    const auto spec = dsp::stft(clip);
    const auto win = dsp::hann_window(1024);
    double time_energy = 0;
    for (std::size_t i = 0; i < 1024; ++i) time_energy += std::pow(clip.samples[i] * win[i], 2);
    double freq_energy = std::norm(spec(0, 0)) + std::norm(spec(0, 512));
    for (std::size_t k = 1; k < 512; ++k) freq_energy += 2 * std::norm(spec(0, k));
    parseval_err = std::max(parseval_err, std::abs(freq_energy / 1024.0 / time_energy - 1.0));
  }

  const auto& bank = dsp::default_mel_filterbank();
  bool bank_ok = bank.weights.rows() == 128 && bank.weights.cols() == 513;
  for (std::size_t k = 1; bank_ok && k < 512; ++k) {
    double total = 0;
    for (std::size_t m = 0; m < 128; ++m) total += bank.weights(m, k);
    bank_ok = total > 0;
  }
  for (std::size_t m = 0; bank_ok && m < 128; ++m) {
    const auto row = bank.weights.row(m);
    const auto peak = std::size_t(std::max_element(row.begin(), row.end()) - row.begin());
    for (std::size_t k = 0; k < row.size(); ++k) bank_ok = bank_ok && row[k] >= 0;
    for (std::size_t k = 1; k <= peak; ++k) bank_ok = bank_ok && row[k - 1] <= row[k] + 1e-15;
    for (std::size_t k = peak + 1; k < row.size(); ++k) bank_ok = bank_ok && row[k] <= row[k - 1] + 1e-15;
  }
  return {conv_err < 1e-9 && dense_err < 1e-9 && fft_err < 1e-9 && parseval_err < 1e-6 && bank_ok,
          fmt("conv %.1e, dense %.1e, fft round trip %.1e, parseval %.1e, filterbank %s", conv_err, dense_err,
              fft_err, parseval_err, bank_ok ? "ok" : "violated")};
}

// ------------------------------------------------------------ 3: metric oracles

Outcome metric_oracles() {
  Rng rng(300);
  int prf_bad = 0, ap_bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = std::size_t(rng.uniform_int(2, 6));
    const int n = rng.uniform_int(0, 60);
    std::vector<std::size_t> truth, pred;
    eval::Confusion cm(k, k, 0);
    for (int i = 0; i < n; ++i) {
      truth.push_back(std::size_t(rng.uniform_int(0, int(k) - 1)));
      pred.push_back(std::size_t(rng.uniform_int(0, int(k) - 1)));
      ++cm(truth.back(), pred.back());
    }
    const auto m = eval::prf1(cm);
    for (std::size_t c = 0; c < k; ++c) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        tp += truth[i] == c && pred[i] == c;
        fp += truth[i] != c && pred[i] == c;
        fn += truth[i] == c && pred[i] != c;
      }
      const double p = tp + fp > 0 ? tp / (tp + fp) : 0, r = tp + fn > 0 ? tp / (tp + fn) : 0;
      const double f = p + r > 0 ? 2 * p * r / (p + r) : 0;
      prf_bad += std::abs(m[c].precision - p) > 1e-12 || std::abs(m[c].recall - r) > 1e-12 ||
                 std::abs(m[c].f1 - f) > 1e-12;
    }
  }
  for (int trial = 0; trial < 200;) {
    const std::size_t n = std::size_t(rng.uniform_int(1, 40));
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    std::unique_ptr<bool[]> flags(new bool[n]);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      pos[i] = flags[i] = rng.bernoulli(0.4);
      any = any || pos[i];
    }
    if (!any) continue;
    ++trial;
    const auto ap = eval::average_precision(s, std::span<const bool>(flags.get(), n));
    ap_bad += !ap || std::abs(*ap - oracle::brute_ap(s, pos)) > 1e-12;
  }
  const std::vector<double> ws{0.9, 0.8, 0.7};
  const bool wp[] = {true, false, true};
  const double worked = *eval::average_precision(ws, wp);

  double total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<eval::EvalExample> ex;
    for (int i = 0; i < 500; ++i) {
      eval::EvalExample e;
      e.id = std::to_string(i);
      e.true_class = i % int(kNumClasses);
      for (auto& v : e.type_scores) v = rng.uniform();
      ex.push_back(e);
    }
    total += eval::mean_ap(eval::type_average_precision(ex)).value;
  }
  const double random_map = total / 50;
  return {prf_bad == 0 && ap_bad == 0 && std::abs(worked - 0.8333) < 5e-5 && std::abs(random_map - 0.2) <= 0.05,
          fmt("prf1 mismatches %d/200 cases, AP mismatches %d/200, worked AP %.4f, random mAP %.3f", prf_bad, ap_bad,
              worked, random_map)};
}

// ------------------------------------------------------------ 4: synthesizer

// Peak of |X(f)| from a zero-padded FFT (about 1.3 Hz resolution).
double fft_peak_hz(const std::vector<double>& x) {
  const std::size_t n = 32768;
  const auto spec = dsp::rfft(x, n);
  std::size_t best = 1;
  for (std::size_t k = 1; k < spec.size(); ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  return double(best) * kPipelineRate / double(n);
}

Outcome synth_physics() {
  Rng rng(400);
  std::ostringstream detail;
  bool ok = true;
  for (const auto& spec : synth::default_specs()) {
    int peaks_in = 0, durations_in = 0, blasts = 0, shockwaves = 0, bursts = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto shot = synth::synth_shot(spec, rng);
      bursts += shot.shots.size() >= 3;
      for (const auto& ev : shot.shots) {
        ++blasts;
        shockwaves += ev.has_shockwave;
        const auto blast = synth::synth_muzzle_blast(ev.peak_freq_hz, ev.blast_duration_ms, 1.0);
        const double ms = 1e3 * double(blast.samples.size()) / kPipelineRate;
        durations_in += ms >= spec.blast_duration_ms.lo && ms <= spec.blast_duration_ms.hi + 1e3 / kPipelineRate;
        peaks_in += spec.peak_freq_hz.contains(fft_peak_hz(blast.samples));
      }
    }
    const double peak_frac = double(peaks_in) / blasts, dur_frac = double(durations_in) / blasts;
    bool cls_ok = peak_frac >= 0.95 && dur_frac == 1.0;
    if (spec.cls == FirearmClass::Shotgun) cls_ok = cls_ok && shockwaves == 0;
    if (spec.burst) cls_ok = cls_ok && bursts == 1000;
    else cls_ok = cls_ok && bursts == 0;
    ok = ok && cls_ok;
    detail << class_key(spec.cls) << " peaks " << fmt("%.3f", peak_frac) << " durations " << fmt("%.3f", dur_frac)
           << " shockwaves " << shockwaves << " bursts " << bursts << "; ";
  }
  return {ok, detail.str()};
}

// ------------------------------------------------------------ 5-8: end to end

struct Corpus {
  fs::path dir;
  fs::path manifest;
  fs::path features;
};

Corpus make_corpus(const fs::path& root, const std::string& name, bool clean, bool svm_features) {
  pipeline::GenerateConfig g;
  g.class_counts = {100, 100, 100, 100, 100};
  g.negatives = 100;
  g.clean = clean;
  g.out_dir = root / name;
  g.seed = 2024;
  pipeline::cmd_generate(g);
  Corpus c{g.out_dir, g.out_dir / "manifest.jsonl", g.out_dir / "features"};
  pipeline::FeaturizeConfig f;
  f.manifest = c.manifest;
  f.out_dir = c.features;
  f.seed = 2024;
  f.kind = dsp::FeatureKind::Mel;
  pipeline::cmd_featurize(f);
  if (svm_features) {
    f.kind = dsp::FeatureKind::MelStats;
    pipeline::cmd_featurize(f);
  }
  return c;
}

pipeline::TrainCommandConfig train_config(const Corpus& c, pipeline::ModelKind kind, const fs::path& out) {
  pipeline::TrainCommandConfig t;
  t.manifest = c.manifest;
  t.features = c.features;
  t.model = kind;
  t.out_dir = out;
  t.split_seed = 2024;
  t.cnn.seed = 2024;
  t.cnn.epochs = 30;
  return t;
}

eval::EvalReport evaluate(const fs::path& model_dir, const Corpus& c, const fs::path& out) {
  pipeline::EvaluateConfig e;
  e.checkpoint = model_dir / "model.gsbw";
  e.manifest = c.manifest;
  e.features = c.features;
  e.split_file = model_dir / "split.json";
  e.split_name = "test";
  e.out_dir = out;
  return pipeline::cmd_evaluate(e);
}

struct EndToEnd {
  Outcome c5, c6, c7, c8;
};

EndToEnd end_to_end(const fs::path& root) {
  EndToEnd r;
  const auto clean = make_corpus(root, "clean", true, false);
  const auto noisy = make_corpus(root, "noisy", false, true);

  // 5: clean CNN.
  const auto t0 = Clock::now();
  const auto clean_run = pipeline::cmd_train(train_config(clean, pipeline::ModelKind::Cnn, root / "cnn_clean"));
  const auto clean_report = evaluate(root / "cnn_clean", clean, root / "cnn_clean_on_clean");
  const double minutes = seconds_since(t0) / 60.0;
  const std::size_t epochs = clean_run.history ? clean_run.history->epochs.size() : 0;
  const double det_f1 = clean_report.detection[0].f1;
  const double type_f1 = eval::macro_f1(clean_report.overall);
  r.c5 = {det_f1 >= 0.95 && type_f1 >= 0.90 && epochs <= 30 && minutes <= 15.0,
          fmt("detection F1 %.3f, type macro-F1 %.3f (Overall), %zu epochs, %.1f min", det_f1, type_f1, epochs,
              minutes)};

  // 6: CNN vs SVM on the same noisy split.
  pipeline::cmd_train(train_config(noisy, pipeline::ModelKind::Cnn, root / "cnn_noisy"));
  auto svm_cfg = train_config(noisy, pipeline::ModelKind::Svm, root / "svm_noisy");
  svm_cfg.split_file = root / "cnn_noisy" / "split.json";
  pipeline::cmd_train(svm_cfg);
  const auto cnn_noisy = evaluate(root / "cnn_noisy", noisy, root / "cnn_noisy_eval");
  const auto svm_noisy = evaluate(root / "svm_noisy", noisy, root / "svm_noisy_eval");
  const bool same_split =
      oracle::slurp(root / "cnn_noisy" / "split.json") == oracle::slurp(root / "svm_noisy" / "split.json");
  r.c6 = {same_split && cnn_noisy.map - svm_noisy.map >= 0.05,
          fmt("CNN mAP %.3f, SVM mAP %.3f, gap %.3f, same split %s", cnn_noisy.map, svm_noisy.map,
              cnn_noisy.map - svm_noisy.map, same_split ? "yes" : "no")};

  // 7: clean-trained CNN on the noisy test partition (same ids and split).
  const auto shifted = evaluate(root / "cnn_clean", noisy, root / "cnn_clean_on_noisy");
  r.c7 = {clean_report.map - shifted.map >= 0.05,
          fmt("clean test mAP %.3f, noisy test mAP %.3f, drop %.3f", clean_report.map, shifted.map,
              clean_report.map - shifted.map)};

  // 8: Overall recall never exceeds Relevant recall on the noisy CNN run.
  std::size_t misses = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) misses += cnn_noisy.overall_confusion(c, kNumClasses);
  bool ordered = true;
  std::ostringstream rec;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    ordered = ordered && cnn_noisy.overall[c].recall <= cnn_noisy.relevant[c].recall;
    rec << fmt("%.2f<=%.2f ", cnn_noisy.overall[c].recall, cnn_noisy.relevant[c].recall);
  }
  r.c8 = {ordered, fmt("detector misses %zu; per-class Overall<=Relevant recall: %s", misses, rec.str().c_str())};
  return r;
}

// ------------------------------------------------------------ 9: reproducibility

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + GSB_CLI_PATH + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::vector<unsigned char>> tree(const fs::path& root) {
  std::map<std::string, std::vector<unsigned char>> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      out[fs::relative(e.path(), root).string()] = oracle::slurp(e.path());
  return out;
}

Outcome reproducibility(const fs::path& root) {
  // Both runs use the same directory because config echoes record paths.
  std::vector<std::map<std::string, std::vector<unsigned char>>> trees;
  bool codes_ok = true;
  const fs::path d = root / "run";
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(d);
    fs::create_directories(d);
    const auto log = root / ("cli" + std::to_string(run) + ".log");
    const std::string q = "\"" + d.string() + "\"";
    const std::vector<std::string> steps{
        "generate --out " + q + "/data --preset uniform --per-class 8 --negatives 8 --seed 9",
        "featurize --manifest " + q + "/data/manifest.jsonl --kind mel --out " + q + "/feat --seed 9",
        "featurize --manifest " + q + "/data/manifest.jsonl --kind melstats --out " + q + "/feat --seed 9",
        "train --manifest " + q + "/data/manifest.jsonl --features " + q + "/feat --out " + q +
            "/cnn --model cnn --epochs 3 --seed 9",
        "train --manifest " + q + "/data/manifest.jsonl --features " + q + "/feat --out " + q +
            "/svm --model svm --seed 9",
        "evaluate --checkpoint " + q + "/cnn/model.gsbw --manifest " + q + "/data/manifest.jsonl --features " + q +
            "/feat --split " + q + "/cnn/split.json --out " + q + "/cnn_eval",
        "evaluate --checkpoint " + q + "/svm/model.gsbw --manifest " + q + "/data/manifest.jsonl --features " + q +
            "/feat --split " + q + "/svm/split.json --out " + q + "/svm_eval",
    };
    for (const auto& s : steps) codes_ok = codes_ok && run_cli(s, log) == 0;
    trees.push_back(tree(d));
  }
  std::size_t differing = 0;
  for (const auto& [path, bytes] : trees[0]) {
    const auto it = trees[1].find(path);
    differing += it == trees[1].end() || it->second != bytes;
  }
  differing += trees[1].size() > trees[0].size() ? trees[1].size() - trees[0].size() : 0;
  const bool has_all = trees[0].count("data/manifest.jsonl") && trees[0].count("cnn/model.gsbw") &&
                       trees[0].count("svm/model.gsbw") && trees[0].count("cnn_eval/report.json") &&
                       trees[0].count("svm_eval/report.json");
  return {codes_ok && has_all && differing == 0,
          fmt("%zu files compared, %zu differ, all steps exit 0: %s", trees[0].size(), differing,
              codes_ok ? "yes" : "no")};
}

}  // namespace

int main() {
  oracle::TempDir work("acceptance");
  int failures = 0;
  auto report = [&](int n, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s: %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  };
  report(1, gradients);
  report(2, dsp_oracles);
  report(3, metric_oracles);
  report(4, synth_physics);
  EndToEnd e2e;
  std::string e2e_error;
  try {
    e2e = end_to_end(work.path());
  } catch (const std::exception& e) {
    e2e_error = e.what();
  }
  const Outcome* parts[] = {&e2e.c5, &e2e.c6, &e2e.c7, &e2e.c8};
  for (int i = 0; i < 4; ++i)
    report(5 + i, [&] { return e2e_error.empty() ? *parts[i] : Outcome{false, "exception: " + e2e_error}; });
  report(9, [&] { return reproducibility(work.path() / "repro"); });
  return failures == 0 ? 0 : 1;
}
