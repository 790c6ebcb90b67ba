#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbsr::nn {

/// One tensor as stored in an RBSRW1 checkpoint.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  bool operator==(const NamedTensor&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, Truncated, DuplicateName, Malformed, Io };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Layout, little-endian: "RBSRW1", u32 count, then per tensor
// u16 name length, UTF-8 name, u8 rank, rank x u32 dims, f32 data.
std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes via a temporary file and rename.
void checkpoint_write(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> checkpoint_read(const std::filesystem::path& path);

const NamedTensor* find_tensor(std::span<const NamedTensor> tensors, const std::string& name);

}  // namespace rbsr::nn
