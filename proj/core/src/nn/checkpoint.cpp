#include "gsb/nn/checkpoint.hpp"

#include "gsb/audio.hpp"
#include "gsb/error.hpp"
#include "gsb/rng.hpp"

#include <bit>
#include <cstring>

namespace gsb::nn {
namespace {

constexpr char kMagic[4] = {'G', 'S', 'B', 'W'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    require(n <= bytes_.size() - pos_, ErrorCode::CorruptFile, "checkpoint truncated");
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rank()));
    for (auto d : t.value.shape()) put<std::uint64_t>(out, d);
    for (double v : t.value.data()) put<double>(out, v);
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 20 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::CorruptFile,
          "not a checkpoint file");
  const auto body = bytes.first(bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  require(stored == fnv1a64(body), ErrorCode::CorruptFile, "checkpoint checksum mismatch");

  Reader r(body);
  r.str(4);
  const auto version = r.get<std::uint32_t>();
  require(version == kCheckpointVersion, ErrorCode::CorruptFile,
          "unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    require(rank <= 4, ErrorCode::CorruptFile, "checkpoint tensor rank too large");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.get<std::uint64_t>());
      require(d <= (std::size_t{1} << 32), ErrorCode::CorruptFile, "checkpoint dimension too large");
      n *= d;
    }
    r.need(n * sizeof(double));
    std::vector<double> data(n);
    for (auto& v : data) v = r.get<double>();
    t.value = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  require(r.pos() == body.size(), ErrorCode::CorruptFile, "trailing bytes in checkpoint");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  write_file_bytes(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace gsb::nn
