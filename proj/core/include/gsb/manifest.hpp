#pragma once

#include "gsb/labels.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsb {

/// One labeled clip. `cls` is present exactly when the clip is a gunshot.
struct ManifestRow {
  std::string id;
  std::string path;  // relative to the manifest's directory
  DetectionLabel detection = DetectionLabel::NoGunshot;
  std::optional<FirearmClass> cls;
  double duration_s = 0.0;
  bool clean = true;
  std::uint64_t seed = 0;

  bool operator==(const ManifestRow&) const = default;
};

/// Line-delimited JSON, one record per clip, in dataset order.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path root;  // directory that row paths are relative to

  std::filesystem::path resolve(const ManifestRow& row) const { return root / row.path; }
  const ManifestRow* find(const std::string& id) const;
  /// Stratification key: class key for gunshots, "no_gunshot" otherwise.
  static std::string stratum(const ManifestRow& row);
};

std::string serialize_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& root);

/// Loads and validates: unique ids, class iff gunshot, every path exists.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Order-sensitive hash of the serialized rows.
std::uint64_t manifest_hash(const Manifest& manifest);

}  // namespace gsb
