#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gsb {

inline constexpr int kPipelineRate = 44100;

/// Where a clip came from: a file path, or the synthesis parameters that
/// produced it.
struct ClipMeta {
  std::string source;
  std::map<std::string, double> params;
};

/// Sampled waveform. Multi-channel audio is stored interleaved; every clip the
/// pipeline hands between modules is mono at 44.1 kHz with samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kPipelineRate;
  int channels = 1;
  ClipMeta meta;

  std::size_t frames() const { return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0; }
  double duration_s() const { return static_cast<double>(frames()) / sample_rate; }
};

/// Round to the signed 16-bit grid used by WAV output, then rescale.
double quantize_pcm16(double x);

/// Writes PCM 16-bit little-endian. Samples are clamped to the int16 range.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);
std::vector<unsigned char> encode_wav(const AudioClip& clip);

/// Reads 8/16/24/32-bit PCM or 32-bit float WAV, any channel count.
AudioClip read_wav(const std::filesystem::path& path);
AudioClip decode_wav(const std::vector<unsigned char>& bytes, const std::string& source = {});

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace gsb
