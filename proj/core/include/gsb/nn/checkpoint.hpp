#pragma once

#include "gsb/nn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gsb::nn {

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (little endian):
///   "GSBW" u32 version u32 count
///   per tensor: u32 name_len, name bytes, u32 rank, u64 dims[rank], f64 values
///   u64 FNV-1a of everything before it
std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
/// Throws CorruptFile on bad magic, truncation, or checksum mismatch.
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace gsb::nn
