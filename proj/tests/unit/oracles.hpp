#pragma once
// Independent reference computations shared by the tests. Deliberately
// naive: O(n^2) transforms and plain loops.

#include <cmath>
#include <complex>
#include <filesystem>
#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t % n) / double(n));
    out[k] = acc;
  }
  return out;
}

/// Frequency of the largest |X(f)| over a zero-padded direct DFT evaluated on
/// a 1 Hz grid between lo and hi.
inline double spectral_peak_hz(const std::vector<double>& x, double rate, double lo = 1.0, double hi = 20000.0,
                               double step = 1.0) {
  double best_f = lo, best = -1.0;
  for (double f = lo; f <= hi; f += step) {
    std::complex<double> acc = 0.0;
    const double w = -2.0 * std::numbers::pi * f / rate;
    for (std::size_t t = 0; t < x.size(); ++t) acc += x[t] * std::polar(1.0, w * double(t));
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_f = f;
    }
  }
  return best_f;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(a.size());
  mb /= double(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// AP by explicit enumeration of ranks; ties keep input order.
inline double brute_ap(const std::vector<double>& scores, const std::vector<bool>& pos) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double hits = 0, total = 0;
  for (std::size_t r = 0; r < order.size(); ++r)
    if (pos[order[r]]) {
      hits += 1;
      total += hits / double(r + 1);
    }
  return total / hits;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gsb_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::vector<unsigned char> slurp(const std::filesystem::path& p) {
  std::vector<unsigned char> out;
  if (FILE* f = std::fopen(p.c_str(), "rb")) {
    unsigned char buf[65536];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) out.insert(out.end(), buf, buf + n);
    std::fclose(f);
  }
  return out;
}

}  // namespace oracle
