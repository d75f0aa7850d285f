#include "gsb/error.hpp"
#include "gsb/rng.hpp"

#include <cmath>
#include <numbers>

namespace gsb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::SceneOverflow: return "SceneOverflow";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::TapeConsumed: return "TapeConsumed";
    case ErrorCode::CorruptFile: return "CorruptFile";
  }
  return "Unknown";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng Rng::for_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

int Rng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo + 1);
  // Reject the tail so the modulo is unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<int>(lo + static_cast<std::int64_t>(x % span));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gsb
