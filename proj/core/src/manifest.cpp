#include "gsb/manifest.hpp"

#include "gsb/audio.hpp"
#include "gsb/error.hpp"
#include "gsb/rng.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <sstream>

namespace gsb {

using nlohmann::json;

const ManifestRow* Manifest::find(const std::string& id) const {
  for (const auto& r : rows)
    if (r.id == id) return &r;
  return nullptr;
}

std::string Manifest::stratum(const ManifestRow& row) {
  return row.cls ? std::string(class_key(*row.cls)) : std::string(detection_key(DetectionLabel::NoGunshot));
}

std::string serialize_manifest(const Manifest& manifest) {
  std::string out;
  for (const auto& r : manifest.rows) {
    json j;
    j["id"] = r.id;
    j["path"] = r.path;
    j["detection_label"] = detection_key(r.detection);
    j["class"] = r.cls ? json(class_key(*r.cls)) : json(nullptr);
    j["duration_s"] = r.duration_s;
    j["clean"] = r.clean;
    j["seed"] = r.seed;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
  Manifest m;
  m.root = root;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = "manifest line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::CorruptFile, where + ": " + e.what());
    }
    try {
      ManifestRow r;
      r.id = j.at("id").get<std::string>();
      r.path = j.at("path").get<std::string>();
      const auto det = detection_from_key(j.at("detection_label").get<std::string>());
      require(det.has_value(), ErrorCode::CorruptFile, where + ": bad detection_label");
      r.detection = *det;
      if (!j.at("class").is_null()) {
        const auto c = class_from_key(j.at("class").get<std::string>());
        require(c.has_value(), ErrorCode::CorruptFile, where + ": unknown class");
        r.cls = c;
      }
      require(r.cls.has_value() == (r.detection == DetectionLabel::Gunshot), ErrorCode::CorruptFile,
              where + ": class must be present exactly for gunshot rows");
      r.duration_s = j.at("duration_s").get<double>();
      r.clean = j.at("clean").get<bool>();
      r.seed = j.at("seed").get<std::uint64_t>();
      require(seen.insert(r.id).second, ErrorCode::CorruptFile, where + ": duplicate id " + r.id);
      m.rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::CorruptFile, where + ": " + e.what());
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  auto m = parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
  for (const auto& r : m.rows)
    require(std::filesystem::exists(m.resolve(r)), ErrorCode::IoError, "missing clip " + m.resolve(r).string());
  return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  const auto text = serialize_manifest(manifest);
  write_file_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

std::uint64_t manifest_hash(const Manifest& manifest) {
  const auto text = serialize_manifest(manifest);
  return fnv1a64({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

}  // namespace gsb
