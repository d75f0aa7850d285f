#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gsb::dsp {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
std::size_t next_power_of_two(std::size_t n);

/// In-place iterative radix-2 FFT. The inverse transform includes the 1/N
/// factor, so fft(x) followed by fft(x, true) returns x.
void fft_inplace(std::span<Complex> data, bool inverse = false);

/// Zero-pads (or truncates) `signal` to n points and returns bins 0..n/2.
std::vector<Complex> rfft(std::span<const double> signal, std::size_t n);

}  // namespace gsb::dsp
