#include "gsb/dsp/fft.hpp"

#include "gsb/error.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <utility>

namespace gsb::dsp {

namespace {

/// exp(-2*pi*i*k/n) for k < n/2, cached per thread and size. Each entry is
/// evaluated directly since a running product drifts for large n.
const std::vector<Complex>& twiddles(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<Complex>> cache;
  auto& tw = cache[n];
  if (tw.empty()) {
    tw.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double theta = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      tw[k] = {std::cos(theta), std::sin(theta)};
    }
  }
  return tw;
}

}  // namespace

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::span<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  require(is_power_of_two(n), ErrorCode::InvalidParam, "FFT length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const auto& tw = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex w = inverse ? std::conj(tw[k * stride]) : tw[k * stride];
        const Complex u = data[i + k];
        const Complex v = data[i + k + half] * w;
        data[i + k] = u + v;
        data[i + k + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

std::vector<Complex> rfft(std::span<const double> signal, std::size_t n) {
  std::vector<Complex> buf(n);
  for (std::size_t i = 0; i < n && i < signal.size(); ++i) buf[i] = signal[i];
  fft_inplace(buf);
  buf.resize(n / 2 + 1);
  return buf;
}

}  // namespace gsb::dsp
