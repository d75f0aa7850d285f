#include "gsb/dsp/fft.hpp"
#include "gsb/dsp/spectral.hpp"
#include "gsb/models/cnn.hpp"
#include "gsb/nn/ops.hpp"
#include "gsb/nn/tape.hpp"
#include "gsb/rng.hpp"
#include "gsb/synth/synthgun.hpp"

#include <benchmark/benchmark.h>

using namespace gsb;

namespace {

AudioClip noise_clip(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  AudioClip clip;
  clip.samples.resize(n);
  for (double& s : clip.samples) s = 0.1 * rng.normal();
  return clip;
}

nn::Tensor random_tensor(const nn::Shape& shape, Rng& rng) {
  nn::Tensor t(shape);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

void BM_Fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<dsp::Complex> x(n);
  for (auto& v : x) v = {rng.normal(), 0.0};
  for (auto _ : state) {
    auto y = x;
    dsp::fft_inplace(y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Fft)->Arg(1024)->Arg(65536);

void BM_MelSpectrogram(benchmark::State& state) {
  const auto clip = noise_clip(66150, 2);  // 1.5 s
  for (auto _ : state) benchmark::DoNotOptimize(dsp::mel_spectrogram(clip).frames.values().data());
}
BENCHMARK(BM_MelSpectrogram)->Unit(benchmark::kMillisecond);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0)), side = static_cast<std::size_t>(state.range(1));
  Rng rng(3);
  const auto x = random_tensor({8, cin, side, side}, rng);
  nn::Parameter w("w", random_tensor({2 * cin, cin, 3, 3}, rng));
  nn::Parameter b("b", random_tensor({2 * cin}, rng));
  for (auto _ : state) {
    nn::Tape tape;
    const auto y = nn::conv2d(tape.constant(x), tape.param(w), tape.param(b), 1, 1);
    tape.backward(nn::sum(y));
    benchmark::DoNotOptimize(w.grad.data().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({16, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);

void BM_CnnForward(benchmark::State& state) {
  const auto model = models::JointCnnModel::init(4);
  Rng rng(5);
  Matrix<double> mel(models::kDefaultInputFrames, models::kInputMels);
  for (double& v : mel.values()) v = rng.normal() - 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(models::cnn_forward(model, mel).p_gunshot);
}
BENCHMARK(BM_CnnForward)->Unit(benchmark::kMillisecond);

void BM_SynthDatasetClip(benchmark::State& state) {
  synth::DatasetRequest req;
  req.class_counts = {20, 20, 20, 20, 20};
  req.negatives = 20;
  req.clean = state.range(0) != 0;
  req.seed = 6;
  std::size_t i = 0;
  for (auto _ : state) {
    ManifestRow row;
    benchmark::DoNotOptimize(synth::render_dataset_clip(req, i++ % 120, row).samples.data());
  }
}
BENCHMARK(BM_SynthDatasetClip)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
