#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace gsb {

/// Seeded random source with portable transforms.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions are written out here because the std
/// distribution classes are allowed to differ between library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for item `stream` of a run seeded with `seed`.
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi], inclusive on both ends.
  int uniform_int(int lo, int hi);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i - 1)));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a; used for content hashes and file checksums.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace gsb
