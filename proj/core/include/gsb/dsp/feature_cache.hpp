#pragma once

#include "gsb/dsp/features.hpp"
#include "gsb/matrix.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace gsb::dsp {

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

/// On disk: "GSBF", u32 version, u32 header length, JSON header
/// {id, kind, shape, version, source_hash}, then rows*cols little-endian
/// float32 values in row-major order.
struct FeatureCacheHeader {
  std::string id;
  FeatureKind kind = FeatureKind::Mel;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint32_t version = kFeatureCacheVersion;
  std::string source_hash;  // hex hash of the source audio plus feature params

  bool operator==(const FeatureCacheHeader&) const = default;
};

struct FeatureCache {
  FeatureCacheHeader header;
  std::vector<float> values;

  Matrix<double> matrix() const;
  std::vector<double> vector() const { return {values.begin(), values.end()}; }
};

std::vector<unsigned char> encode_feature_cache(const FeatureCacheHeader& header, std::span<const double> values);
FeatureCache decode_feature_cache(const std::vector<unsigned char>& bytes, const std::string& source = {});

void write_feature_cache(const std::filesystem::path& path, const FeatureCacheHeader& header,
                         std::span<const double> values);
FeatureCache read_feature_cache(const std::filesystem::path& path);
/// Header only; nullopt if the file is missing or unreadable.
std::optional<FeatureCacheHeader> peek_feature_cache(const std::filesystem::path& path);

}  // namespace gsb::dsp
