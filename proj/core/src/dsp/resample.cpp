#include "gsb/dsp/resample.hpp"

#include "gsb/error.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace gsb::dsp {
namespace {

constexpr double kZeroCrossings = 32.0;
constexpr double kRolloff = 0.94;
constexpr double kKaiserBeta = 8.6;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<double> resample(std::span<const double> x, int in_rate, int out_rate) {
  require(in_rate > 0 && out_rate > 0, ErrorCode::InvalidParam, "sample rates must be positive");
  if (in_rate == out_rate) return {x.begin(), x.end()};

  const int g = std::gcd(in_rate, out_rate);
  const auto up = static_cast<std::int64_t>(out_rate / g);    // L
  const auto down = static_cast<std::int64_t>(in_rate / g);   // M
  const double cutoff = std::min(1.0, static_cast<double>(up) / static_cast<double>(down)) * kRolloff;
  const auto half = static_cast<std::int64_t>(std::ceil(kZeroCrossings / cutoff));
  const std::size_t taps = static_cast<std::size_t>(2 * half);
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);

  // One filter row per fractional phase p/L. Row p tap j weights input sample
  // base + j - half + 1, located (j - half + 1 - p/L) input samples from the
  // output instant.
  std::vector<double> table(static_cast<std::size_t>(up) * taps);
  for (std::int64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    for (std::size_t j = 0; j < taps; ++j) {
      const double d = static_cast<double>(static_cast<std::int64_t>(j) - half + 1) - frac;
      const double r = d / static_cast<double>(half);
      const double w = std::abs(r) >= 1.0 ? 0.0 : std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      table[static_cast<std::size_t>(p) * taps + j] = cutoff * sinc(cutoff * d) * w;
    }
  }

  const auto n_in = static_cast<std::int64_t>(x.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(static_cast<std::size_t>(n_out));
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    const double* h = table.data() + static_cast<std::size_t>(phase) * taps;
    double acc = 0.0;
    for (std::size_t j = 0; j < taps; ++j) {
      const std::int64_t idx = base + static_cast<std::int64_t>(j) - half + 1;
      if (idx >= 0 && idx < n_in) acc += h[j] * x[static_cast<std::size_t>(idx)];
    }
    y[static_cast<std::size_t>(n)] = acc;
  }
  return y;
}

AudioClip normalize_input(const AudioClip& clip) {
  require(clip.channels == 1 || clip.channels == 2, ErrorCode::UnsupportedFormat,
          "only mono or stereo input is supported, got " + std::to_string(clip.channels) + " channels");
  require(clip.sample_rate >= kMinInputRate && clip.sample_rate <= kMaxInputRate, ErrorCode::UnsupportedFormat,
          "sample rate " + std::to_string(clip.sample_rate) + " Hz outside supported range");

  const std::size_t frames = clip.frames();
  std::vector<double> mono(frames);
  if (clip.channels == 1) {
    mono.assign(clip.samples.begin(), clip.samples.begin() + static_cast<std::ptrdiff_t>(frames));
  } else {
    for (std::size_t i = 0; i < frames; ++i) mono[i] = 0.5 * (clip.samples[2 * i] + clip.samples[2 * i + 1]);
  }

  AudioClip out;
  out.samples = resample(mono, clip.sample_rate, kPipelineRate);
  for (double& s : out.samples) {
    require(std::isfinite(s), ErrorCode::NonFiniteValue, "non-finite sample in input");
    s = quantize_pcm16(s);
  }
  out.sample_rate = kPipelineRate;
  out.channels = 1;
  out.meta = clip.meta;
  return out;
}

}  // namespace gsb::dsp
