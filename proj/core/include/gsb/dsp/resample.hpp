#pragma once

#include "gsb/audio.hpp"

#include <span>
#include <vector>

namespace gsb::dsp {

inline constexpr int kMinInputRate = 8000;
inline constexpr int kMaxInputRate = 192000;

/// Resamples x from `in_rate` to `out_rate` with a Kaiser-windowed sinc
/// polyphase filter. Output length is ceil(len * out_rate / in_rate).
std::vector<double> resample(std::span<const double> x, int in_rate, int out_rate);

/// Brings any supported clip onto the pipeline grid: mono (channel mean),
/// 44.1 kHz, values snapped to 16-bit steps and rescaled to [-1, 1].
/// Throws UnsupportedFormat for more than two channels or rates outside
/// [8000, 192000] Hz.
AudioClip normalize_input(const AudioClip& clip);

}  // namespace gsb::dsp
