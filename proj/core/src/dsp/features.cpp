#include "gsb/dsp/features.hpp"

#include "gsb/dsp/fft.hpp"
#include "gsb/error.hpp"
#include "gsb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsb::dsp {

std::string_view feature_kind_key(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Mel: return "mel";
    case FeatureKind::MelStats: return "melstats";
    case FeatureKind::Boaw: return "boaw";
    case FeatureKind::Autocorr: return "autocorr";
  }
  return "unknown";
}

std::optional<FeatureKind> feature_kind_from_key(std::string_view key) {
  for (auto k : {FeatureKind::Mel, FeatureKind::MelStats, FeatureKind::Boaw, FeatureKind::Autocorr})
    if (feature_kind_key(k) == key) return k;
  return std::nullopt;
}

std::vector<double> autocorrelation(const AudioClip& clip, std::size_t max_lag) {
  const std::size_t n = clip.samples.size();
  require(n > 0, ErrorCode::InvalidParam, "autocorrelation of an empty clip");
  require(max_lag < n, ErrorCode::InvalidParam, "max_lag must be shorter than the clip");

  const std::size_t size = next_power_of_two(2 * n);
  std::vector<Complex> buf(size);
  for (std::size_t i = 0; i < n; ++i) buf[i] = clip.samples[i];
  fft_inplace(buf);
  for (auto& z : buf) z = std::norm(z);
  fft_inplace(buf, true);

  std::vector<double> r(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) r[l] = buf[l].real() / static_cast<double>(n);
  if (r[0] > 0.0) {
    const double r0 = r[0];
    for (double& v : r) v /= r0;
    r[0] = 1.0;
  }
  return r;
}

FeatureVector autocorr_features(const AudioClip& clip) {
  const std::size_t lag = std::min(kAutocorrMaxLag, clip.samples.size() - 1);
  const auto r = autocorrelation(clip, lag);
  const std::size_t block = kAutocorrMaxLag / kAutocorrBlocks;
  FeatureVector fv{std::vector<double>(kAutocorrBlocks, 0.0), FeatureKind::Autocorr};
  for (std::size_t b = 0; b < kAutocorrBlocks; ++b) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 1 + b * block; l <= (b + 1) * block && l < r.size(); ++l) best = std::max(best, r[l]);
    fv.values[b] = std::isfinite(best) ? best : 0.0;
  }
  return fv;
}

FeatureVector mel_stats(const MelSpectrogram& mel) {
  const std::size_t t_count = mel.n_frames(), bands = mel.n_mels();
  require(t_count >= 1, ErrorCode::InsufficientData, "mel_stats needs at least one frame");
  // Welford's update per band.
  std::vector<double> mean(bands, 0.0), m2(bands, 0.0);
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto row = mel.frames.row(t);
    const double inv = 1.0 / static_cast<double>(t + 1);
    for (std::size_t b = 0; b < bands; ++b) {
      const double delta = row[b] - mean[b];
      mean[b] += delta * inv;
      m2[b] += delta * (row[b] - mean[b]);
    }
  }
  FeatureVector fv{std::vector<double>(2 * bands), FeatureKind::MelStats};
  for (std::size_t b = 0; b < bands; ++b) {
    fv.values[b] = mean[b];
    fv.values[bands + b] = std::sqrt(std::max(0.0, m2[b] / static_cast<double>(t_count)));
  }
  return fv;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - b[i];
    d += e * e;
  }
  return d;
}

}  // namespace

std::size_t nearest_centroid(const BoawCodebook& codebook, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < codebook.k; ++c) {
    const double d = squared_distance(codebook.centroids.row(c), x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

KMeansResult kmeans_fit(const Matrix<double>& descriptors, std::size_t k, std::size_t iters, std::uint64_t seed) {
  const std::size_t n = descriptors.rows(), dim = descriptors.cols();
  require(k >= 2, ErrorCode::InsufficientData, "codebook needs k >= 2");
  require(n >= k, ErrorCode::InsufficientData,
          "k-means needs at least k=" + std::to_string(k) + " descriptors, got " + std::to_string(n));

  Rng rng(seed);
  KMeansResult res;
  auto& cb = res.codebook;
  cb.k = k;
  cb.dim = dim;
  cb.centroids = Matrix<double>(k, dim);

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  auto take = [&](std::size_t c, std::size_t idx) {
    std::copy_n(descriptors.row(idx).begin(), dim, cb.centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(descriptors.row(i), cb.centroids.row(c)));
  };
  take(0, static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n - 1))));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n - 1)));
    }
    take(c, pick);
  }

  std::vector<std::size_t> assign(n, k);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (std::size_t it = 0; it < std::max<std::size_t>(1, iters); ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest_centroid(cb, descriptors.row(i));
      inertia += squared_distance(descriptors.row(i), cb.centroids.row(c));
      changed |= c != assign[i];
      assign[i] = c;
    }
    res.inertia.push_back(inertia);
    res.iterations = it + 1;
    if (!changed) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = descriptors.row(i);
      for (std::size_t j = 0; j < dim; ++j) sums[assign[i] * dim + j] += row[j];
      ++counts[assign[i]];
    }
    // An empty cluster keeps its previous centroid.
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (std::size_t j = 0; j < dim; ++j)
          cb.centroids(c, j) = sums[c * dim + j] / static_cast<double>(counts[c]);
  }
  return res;
}

FeatureVector boaw_encode(const MelSpectrogram& mel, const BoawCodebook& codebook) {
  require(codebook.dim == mel.n_mels(), ErrorCode::DimensionMismatch,
          "codebook dimension " + std::to_string(codebook.dim) + " does not match " + std::to_string(mel.n_mels()) +
              " mel bands");
  require(codebook.k >= 1, ErrorCode::InvalidParam, "empty codebook");
  FeatureVector fv{std::vector<double>(codebook.k, 0.0), FeatureKind::Boaw};
  for (std::size_t t = 0; t < mel.n_frames(); ++t) fv.values[nearest_centroid(codebook, mel.frames.row(t))] += 1.0;
  if (mel.n_frames() > 0)
    for (double& v : fv.values) v /= static_cast<double>(mel.n_frames());
  return fv;
}

}  // namespace gsb::dsp
