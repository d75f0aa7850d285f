#include "gsb/audio.hpp"

#include "gsb/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace gsb {
namespace {

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t get_u32(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t get_u16(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::int16_t to_pcm16(double x) {
  const double q = std::round(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
}

}  // namespace

double quantize_pcm16(double x) { return to_pcm16(x) / 32768.0; }

std::vector<unsigned char> encode_wav(const AudioClip& clip) {
  require(clip.channels >= 1, ErrorCode::InvalidParam, "channel count must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, static_cast<std::uint16_t>(clip.channels));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate * clip.channels * 2));
  put_u16(out, static_cast<std::uint16_t>(clip.channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : clip.samples) put_u16(out, static_cast<std::uint16_t>(to_pcm16(s)));
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) { write_file_bytes(path, encode_wav(clip)); }

AudioClip decode_wav(const std::vector<unsigned char>& b, const std::string& source) {
  auto corrupt = [&](const std::string& why) { fail(ErrorCode::CorruptFile, source + ": " + why); };
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    corrupt("not a RIFF/WAVE file");

  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::uint32_t size = get_u32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + size > b.size()) corrupt("chunk overruns file");
    if (std::memcmp(b.data() + at, "fmt ", 4) == 0) {
      if (size < 16) corrupt("short fmt chunk");
      format = get_u16(b, body);
      channels = get_u16(b, body + 2);
      rate = get_u32(b, body + 4);
      bits = get_u16(b, body + 14);
      if (format == 0xFFFE && size >= 26) format = get_u16(b, body + 24);  // WAVE_FORMAT_EXTENSIBLE
      have_fmt = true;
    } else if (std::memcmp(b.data() + at, "data", 4) == 0) {
      if (!have_fmt) corrupt("data chunk before fmt chunk");
      if (channels < 1) corrupt("zero channels");
      const int width = bits / 8;
      const bool pcm = format == 1 && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
      const bool flt = format == 3 && bits == 32;
      if (!pcm && !flt) fail(ErrorCode::UnsupportedFormat, source + ": unsupported sample encoding");
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.channels = channels;
      clip.meta.source = source;
      const std::size_t count = size / static_cast<std::size_t>(width);
      clip.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* p = b.data() + body + i * static_cast<std::size_t>(width);
        double v = 0.0;
        if (flt) {
          float f;
          std::memcpy(&f, p, 4);
          v = f;
        } else if (bits == 8) {
          v = (static_cast<int>(p[0]) - 128) / 128.0;
        } else if (bits == 16) {
          v = static_cast<std::int16_t>(p[0] | (p[1] << 8)) / 32768.0;
        } else if (bits == 24) {
          std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
          if (s & 0x800000) s |= ~0xffffff;
          v = s / 8388608.0;
        } else {
          std::int32_t s;
          std::memcpy(&s, p, 4);
          v = s / 2147483648.0;
        }
        if (!std::isfinite(v)) corrupt("non-finite sample");
        clip.samples[i] = v;
      }
      clip.samples.resize(clip.samples.size() - clip.samples.size() % static_cast<std::size_t>(channels));
      return clip;
    }
    at = body + size + (size & 1u);
  }
  fail(ErrorCode::CorruptFile, source + ": no data chunk");
}

AudioClip read_wav(const std::filesystem::path& path) { return decode_wav(read_file_bytes(path), path.string()); }

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace gsb
