#pragma once

#include "gsb/audio.hpp"
#include "gsb/dsp/fft.hpp"
#include "gsb/matrix.hpp"

#include <string>

namespace gsb::dsp {

// 1024/512 samples at 44.1 kHz is 23.2/11.6 ms, the radix-2 sizes nearest to
// a 23 ms window and 11.5 ms hop.
inline constexpr std::size_t kWindow = 1024;
inline constexpr std::size_t kHop = 512;
inline constexpr std::size_t kMelBands = 128;
inline constexpr double kLogFloor = 1e-10;

/// Number of frames produced for an n-sample input; 0 if n < win.
constexpr std::size_t frame_count(std::size_t n, std::size_t win = kWindow, std::size_t hop = kHop) {
  return n < win ? 0 : 1 + (n - win) / hop;
}

/// Periodic Hann window.
std::vector<double> hann_window(std::size_t n);

/// T x (win/2 + 1) one-sided spectra of Hann-windowed frames. Throws TooShort
/// when the clip holds fewer than `win` samples.
Matrix<Complex> stft(const AudioClip& clip, std::size_t win = kWindow, std::size_t hop = kHop);

/// HTK mel scale: m = 2595 log10(1 + f/700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with centres evenly spaced on the mel axis.
///
/// Each weight is the integral of the continuous triangle over the frequency
/// span of its FFT bin, so filters narrower than a bin still receive weight.
/// Rows are then scaled to sum to one (unit area), so a flat power spectrum
/// maps to a flat mel vector.
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_fft = 0;
  int sample_rate = kPipelineRate;
  double f_min = 0.0;
  double f_max = 0.0;
  Matrix<double> weights;             // n_mels x (n_fft/2 + 1)
  std::vector<double> centers_hz;     // n_mels
  std::vector<std::size_t> first_bin;  // first non-zero bin per filter
  std::vector<std::size_t> last_bin;   // one past the last non-zero bin

  std::size_t n_bins() const { return n_fft / 2 + 1; }
};

MelFilterbank build_mel_filterbank(std::size_t n_mels = kMelBands, std::size_t n_fft = kWindow, double f_min = 0.0,
                                   double f_max = kPipelineRate / 2.0, int sample_rate = kPipelineRate);

/// Shared instance of the default 128-band, 1024-point, 0-22050 Hz bank.
const MelFilterbank& default_mel_filterbank();

/// T x 128 matrix of log(mel power + 1e-10) values.
struct MelSpectrogram {
  Matrix<double> frames;
  double frame_rate = static_cast<double>(kPipelineRate) / kHop;
  std::string source_id;

  std::size_t n_frames() const { return frames.rows(); }
  std::size_t n_mels() const { return frames.cols(); }
};

MelSpectrogram mel_spectrogram(const AudioClip& clip, const MelFilterbank& bank = default_mel_filterbank());

}  // namespace gsb::dsp
