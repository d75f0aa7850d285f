#include "gsb/dsp/spectral.hpp"

#include "gsb/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gsb::dsp {
namespace {

/// Integral of the unit-height triangle (lo, mid, hi) from -inf to x.
double triangle_cdf(double x, double lo, double mid, double hi) {
  if (x <= lo) return 0.0;
  const double left_area = 0.5 * (mid - lo);
  if (x <= mid) {
    const double d = x - lo;
    return mid > lo ? 0.5 * d * d / (mid - lo) : 0.0;
  }
  const double right_area = 0.5 * (hi - mid);
  if (x >= hi) return left_area + right_area;
  const double d = hi - x;
  return left_area + right_area - (hi > mid ? 0.5 * d * d / (hi - mid) : 0.0);
}

}  // namespace

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

Matrix<Complex> stft(const AudioClip& clip, std::size_t win, std::size_t hop) {
  require(is_power_of_two(win), ErrorCode::InvalidParam, "STFT window must be a power of two");
  require(hop > 0, ErrorCode::InvalidParam, "STFT hop must be positive");
  require(clip.channels == 1, ErrorCode::InvalidParam, "STFT expects a mono clip");
  const std::size_t n = clip.samples.size();
  require(n >= win, ErrorCode::TooShort,
          "clip has " + std::to_string(n) + " samples, need at least " + std::to_string(win));

  const std::size_t frames = frame_count(n, win, hop);
  const auto window = hann_window(win);
  Matrix<Complex> out(frames, win / 2 + 1);
  std::vector<Complex> buf(win);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = clip.samples.data() + t * hop;
    for (std::size_t i = 0; i < win; ++i) buf[i] = x[i] * window[i];
    fft_inplace(buf);
    std::copy_n(buf.begin(), win / 2 + 1, out.row(t).begin());
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_mel_filterbank(std::size_t n_mels, std::size_t n_fft, double f_min, double f_max,
                                   int sample_rate) {
  require(n_mels >= 2, ErrorCode::InvalidParam, "need at least two mel bands");
  require(is_power_of_two(n_fft), ErrorCode::InvalidParam, "FFT size must be a power of two");
  require(f_max <= sample_rate / 2.0 + 1e-9, ErrorCode::InvalidParam, "f_max above Nyquist");
  require(f_min >= 0.0 && f_min < f_max, ErrorCode::InvalidParam, "need 0 <= f_min < f_max");

  MelFilterbank bank;
  bank.n_mels = n_mels;
  bank.n_fft = n_fft;
  bank.sample_rate = sample_rate;
  bank.f_min = f_min;
  bank.f_max = f_max;
  const std::size_t bins = n_fft / 2 + 1;
  bank.weights = Matrix<double>(n_mels, bins, 0.0);

  const double mel_lo = hz_to_mel(f_min), mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    bank.centers_hz.push_back(mid);
    double total = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double a = std::max(f_min, (static_cast<double>(k) - 0.5) * bin_hz);
      const double b = std::min(f_max, (static_cast<double>(k) + 0.5) * bin_hz);
      const double w = b > a ? triangle_cdf(b, lo, mid, hi) - triangle_cdf(a, lo, mid, hi) : 0.0;
      bank.weights(m, k) = w;
      total += w;
    }
    std::size_t first = bins, last = 0;
    for (std::size_t k = 0; k < bins; ++k) {
      if (total > 0.0) bank.weights(m, k) /= total;
      if (bank.weights(m, k) > 0.0) {
        first = std::min(first, k);
        last = k + 1;
      }
    }
    bank.first_bin.push_back(first == bins ? 0 : first);
    bank.last_bin.push_back(last);
  }
  return bank;
}

const MelFilterbank& default_mel_filterbank() {
  static const MelFilterbank bank = build_mel_filterbank();
  return bank;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const MelFilterbank& bank) {
  require(clip.sample_rate == bank.sample_rate, ErrorCode::InvalidParam, "clip rate does not match filterbank");
  const auto spec = stft(clip, bank.n_fft, kHop);
  MelSpectrogram out;
  out.source_id = clip.meta.source;
  out.frame_rate = static_cast<double>(clip.sample_rate) / kHop;
  out.frames = Matrix<double>(spec.rows(), bank.n_mels);
  std::vector<double> power(bank.n_bins());
  for (std::size_t t = 0; t < spec.rows(); ++t) {
    const auto row = spec.row(t);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(row[k]);
    for (std::size_t m = 0; m < bank.n_mels; ++m) {
      const auto w = bank.weights.row(m);
      double acc = 0.0;
      for (std::size_t k = bank.first_bin[m]; k < bank.last_bin[m]; ++k) acc += w[k] * power[k];
      out.frames(t, m) = std::log(acc + kLogFloor);
    }
  }
  return out;
}

}  // namespace gsb::dsp
