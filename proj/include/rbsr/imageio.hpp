#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbsr {

/// 8-bit raster, row-major, channel-interleaved.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  RawImage() = default;
  RawImage(int w, int h, int c);

  std::uint8_t& at(int y, int x, int c) { return data[(std::size_t(y) * width + x) * channels + c]; }
  std::uint8_t at(int y, int x, int c) const { return data[(std::size_t(y) * width + x) * channels + c]; }

  bool operator==(const RawImage&) const = default;
};

/// Floating-point image, channel-planar. Decoded values lie in [0, 1];
/// intermediate results may leave that range.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int c, int h, int w, float fill = 0.0f);

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return std::size_t(height) * width; }

  float& at(int c, int y, int x) { return data[(std::size_t(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return data[(std::size_t(c) * height + y) * width + x]; }

  std::span<float> channel(int c) { return {data.data() + c * plane(), plane()}; }
  std::span<const float> channel(int c) const { return {data.data() + c * plane(), plane()}; }

  bool same_shape(const ImageTensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  bool operator==(const ImageTensor&) const = default;
};

class CodecError : public std::runtime_error {
 public:
  enum class Kind { MalformedHeader, UnsupportedMaxval, TruncatedRaster, Io };

  CodecError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

RawImage decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const RawImage& image);

ImageTensor to_tensor(const RawImage& image);
RawImage to_raw(const ImageTensor& tensor);

RawImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RawImage& image);

inline ImageTensor load_image(const std::filesystem::path& path) { return to_tensor(read_ppm(path)); }
inline void save_image(const std::filesystem::path& path, const ImageTensor& t) { write_ppm(path, to_raw(t)); }

/// Channel mean, used wherever a single luminance plane is wanted.
ImageTensor to_gray(const ImageTensor& image);

/// Copy of the window [y0, y0+h) x [x0, x0+w).
ImageTensor crop(const ImageTensor& image, int y0, int x0, int h, int w);

}  // namespace rbsr
