#pragma once

#include "gsb/audio.hpp"
#include "gsb/dsp/spectral.hpp"
#include "gsb/matrix.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace gsb::dsp {

enum class FeatureKind { Mel, MelStats, Boaw, Autocorr };

std::string_view feature_kind_key(FeatureKind kind);
std::optional<FeatureKind> feature_kind_from_key(std::string_view key);

/// Fixed-length clip descriptor fed to the SVM.
struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::MelStats;
};

/// Biased autocorrelation r[l] = sum_n x[n]x[n+l] / N for l = 0..max_lag,
/// divided by r[0] when the clip has energy so that r[0] == 1.
/// Computed through a zero-padded FFT.
std::vector<double> autocorrelation(const AudioClip& clip, std::size_t max_lag);

inline constexpr std::size_t kAutocorrBlocks = 128;
inline constexpr std::size_t kAutocorrMaxLag = 6656;  // ~151 ms, covers 10-15 Hz burst periods

/// 128-dim summary of the autocorrelation: the maximum of r over each of 128
/// consecutive 52-lag blocks covering lags 1..6656.
FeatureVector autocorr_features(const AudioClip& clip);

/// Per-band mean then per-band (population) standard deviation over time.
FeatureVector mel_stats(const MelSpectrogram& mel);

struct BoawCodebook {
  std::size_t k = 0;
  std::size_t dim = 0;
  Matrix<double> centroids;  // k x dim
};

struct KMeansResult {
  BoawCodebook codebook;
  std::vector<double> inertia;  // after each assignment step
  std::size_t iterations = 0;
};

inline constexpr std::size_t kDefaultCodebookSize = 64;

/// Lloyd's algorithm from k-means++ seeds. Rows of `descriptors` are points.
/// Throws InsufficientData with fewer than k points or k < 2.
KMeansResult kmeans_fit(const Matrix<double>& descriptors, std::size_t k, std::size_t iters, std::uint64_t seed);

/// Index of the closest centroid; ties resolve to the lowest index.
std::size_t nearest_centroid(const BoawCodebook& codebook, std::span<const double> x);

/// L1-normalised histogram of nearest-centroid assignments of each frame.
FeatureVector boaw_encode(const MelSpectrogram& mel, const BoawCodebook& codebook);

}  // namespace gsb::dsp
