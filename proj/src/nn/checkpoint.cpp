#include "rbsr/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace rbsr::nn {

namespace {

constexpr char kMagic[] = "RBSRW1";
constexpr std::size_t kMagicLen = 6;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class U>
  void le(U v) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n)
      throw CheckpointError(CheckpointError::Kind::Truncated, std::string("checkpoint truncated reading ") + what);
  }
  template <class U>
  U le(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(U(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors) {
  Writer w;
  w.bytes(kMagic, kMagicLen);
  w.le(std::uint32_t(tensors.size()));
  std::set<std::string> seen;
  for (const auto& t : tensors) {
    if (!seen.insert(t.name).second)
      throw CheckpointError(CheckpointError::Kind::DuplicateName, "duplicate tensor name '" + t.name + "'");
    if (t.name.size() > 0xFFFF || t.dims.size() > 0xFF)
      throw CheckpointError(CheckpointError::Kind::Malformed, "tensor '" + t.name + "' name or rank too large");
    if (element_count(t.dims) != t.data.size())
      throw CheckpointError(CheckpointError::Kind::Malformed, "tensor '" + t.name + "' data does not match dims");
    w.le(std::uint16_t(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.le(std::uint8_t(t.dims.size()));
    for (auto d : t.dims) w.le(d);
    for (float f : t.data) w.le(std::bit_cast<std::uint32_t>(f));
  }
  return w.take();
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagicLen || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not an RBSRW1 checkpoint (bad magic)");
  Reader r(bytes.subspan(kMagicLen));
  const auto count = r.le<std::uint32_t>("tensor count");
  std::vector<NamedTensor> out;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = r.le<std::uint16_t>("name length");
    const auto name = r.take(name_len, "name");
    t.name.assign(name.begin(), name.end());
    if (!seen.insert(t.name).second)
      throw CheckpointError(CheckpointError::Kind::DuplicateName, "duplicate tensor name '" + t.name + "'");
    const auto rank = r.le<std::uint8_t>("rank");
    for (int d = 0; d < rank; ++d) t.dims.push_back(r.le<std::uint32_t>("dims"));
    const std::size_t n = element_count(t.dims);
    r.need(n * 4, "tensor data");
    t.data.resize(n);
    for (auto& f : t.data) f = std::bit_cast<float>(r.le<std::uint32_t>("tensor data"));
    out.push_back(std::move(t));
  }
  return out;
}

void checkpoint_write(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw CheckpointError(CheckpointError::Kind::Io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out)
      throw CheckpointError(CheckpointError::Kind::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<NamedTensor> checkpoint_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CheckpointError(CheckpointError::Kind::Io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

const NamedTensor* find_tensor(std::span<const NamedTensor> tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name)
      return &t;
  return nullptr;
}

}  // namespace rbsr::nn
