#include "gsb/dsp/feature_cache.hpp"

#include "gsb/audio.hpp"
#include "gsb/error.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace gsb::dsp {
namespace {

static_assert(std::endian::native == std::endian::little, "feature caches assume a little-endian host");

constexpr char kMagic[4] = {'G', 'S', 'B', 'F'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

FeatureCacheHeader parse_header(const std::string& text, const std::string& source) {
  try {
    const auto j = nlohmann::json::parse(text);
    FeatureCacheHeader h;
    h.id = j.at("id").get<std::string>();
    const auto kind = feature_kind_from_key(j.at("kind").get<std::string>());
    require(kind.has_value(), ErrorCode::CorruptFile, source + ": unknown feature kind");
    h.kind = *kind;
    h.rows = j.at("shape").at(0).get<std::size_t>();
    h.cols = j.at("shape").at(1).get<std::size_t>();
    h.version = j.at("version").get<std::uint32_t>();
    h.source_hash = j.value("source_hash", "");
    return h;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptFile, source + ": bad feature cache header: " + e.what());
  }
}

}  // namespace

Matrix<double> FeatureCache::matrix() const {
  Matrix<double> m(header.rows, header.cols);
  std::copy(values.begin(), values.end(), m.values().begin());
  return m;
}

std::vector<unsigned char> encode_feature_cache(const FeatureCacheHeader& header, std::span<const double> values) {
  require(values.size() == header.rows * header.cols, ErrorCode::ShapeMismatch, "feature cache shape mismatch");
  nlohmann::json j;
  j["id"] = header.id;
  j["kind"] = feature_kind_key(header.kind);
  j["shape"] = {header.rows, header.cols};
  j["version"] = header.version;
  j["source_hash"] = header.source_hash;
  const auto text = j.dump();

  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, header.version);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  const std::size_t at = out.size();
  out.resize(at + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto f = static_cast<float>(values[i]);
    std::memcpy(out.data() + at + 4 * i, &f, 4);
  }
  return out;
}

FeatureCache decode_feature_cache(const std::vector<unsigned char>& b, const std::string& source) {
  require(b.size() >= 12 && std::memcmp(b.data(), kMagic, 4) == 0, ErrorCode::CorruptFile,
          source + ": not a feature cache");
  const std::uint32_t version = get_u32(b.data() + 4);
  require(version == kFeatureCacheVersion, ErrorCode::CorruptFile,
          source + ": unsupported feature cache version " + std::to_string(version));
  const std::uint32_t len = get_u32(b.data() + 8);
  require(b.size() >= 12 + static_cast<std::size_t>(len), ErrorCode::CorruptFile, source + ": truncated header");
  FeatureCache fc;
  fc.header = parse_header(std::string(b.begin() + 12, b.begin() + 12 + len), source);
  const std::size_t at = 12 + len;
  const std::size_t count = fc.header.rows * fc.header.cols;
  require(b.size() == at + 4 * count, ErrorCode::CorruptFile, source + ": payload size does not match shape");
  fc.values.resize(count);
  std::memcpy(fc.values.data(), b.data() + at, 4 * count);
  return fc;
}

void write_feature_cache(const std::filesystem::path& path, const FeatureCacheHeader& header,
                         std::span<const double> values) {
  write_file_bytes(path, encode_feature_cache(header, values));
}

FeatureCache read_feature_cache(const std::filesystem::path& path) {
  return decode_feature_cache(read_file_bytes(path), path.string());
}

std::optional<FeatureCacheHeader> peek_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  unsigned char head[12];
  if (!in.read(reinterpret_cast<char*>(head), 12) || std::memcmp(head, kMagic, 4) != 0) return std::nullopt;
  if (get_u32(head + 4) != kFeatureCacheVersion) return std::nullopt;
  std::string text(get_u32(head + 8), '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(text.size()))) return std::nullopt;
  try {
    return parse_header(text, path.string());
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace gsb::dsp
