#include "rbsr/imageio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace rbsr {

RawImage::RawImage(int w, int h, int c)
    : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0) {
  if (w < 1 || h < 1 || (c != 1 && c != 3))
    throw std::invalid_argument("RawImage: invalid shape");
}

ImageTensor::ImageTensor(int c, int h, int w, float fill)
    : channels(c), height(h), width(w), data(std::size_t(c) * h * w, fill) {
  if (c < 1 || h < 0 || w < 0)
    throw std::invalid_argument("ImageTensor: invalid shape");
}

namespace {

bool is_space(std::uint8_t b) { return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f'; }

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads an unsigned decimal token.
  // The token must be terminated by whitespace or '#' (never by EOF).
  long read_number(const char* field) {
    skip_space_and_comments();
    std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1L << 24))
        fail(std::string("value too large for ") + field);
      ++pos_;
    }
    if (pos_ == start)
      fail(std::string("expected ") + field);
    if (pos_ >= bytes_.size() || !(is_space(bytes_[pos_]) || bytes_[pos_] == '#'))
      fail(std::string("unterminated ") + field);
    return value;
  }

  std::size_t& pos() { return pos_; }

  [[noreturn]] static void fail(const std::string& what) {
    throw CodecError(CodecError::Kind::MalformedHeader, "malformed PNM header: " + what);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

RawImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5'))
    HeaderReader::fail("bad magic");
  const int channels = bytes[1] == '6' ? 3 : 1;

  HeaderReader reader(bytes.subspan(2));
  if (bytes.size() == 2 || !(is_space(bytes[2]) || bytes[2] == '#'))
    HeaderReader::fail("magic not followed by whitespace");

  const long width = reader.read_number("width");
  const long height = reader.read_number("height");
  const long maxval = reader.read_number("maxval");
  if (width < 1 || height < 1)
    HeaderReader::fail("zero dimension");
  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t pos = 2 + reader.pos();
  if (!is_space(bytes[pos]))
    HeaderReader::fail("maxval not followed by whitespace");
  ++pos;
  if (maxval != 255)
    throw CodecError(CodecError::Kind::UnsupportedMaxval,
                     "unsupported maxval " + std::to_string(maxval) + " (only 255)");

  RawImage image(int(width), int(height), channels);
  if (bytes.size() - pos < image.data.size())
    throw CodecError(CodecError::Kind::TruncatedRaster,
                     "truncated raster: expected " + std::to_string(image.data.size()) + " bytes, got " +
                         std::to_string(bytes.size() - pos));
  std::copy_n(bytes.begin() + pos, image.data.size(), image.data.begin());
  return image;
}

std::vector<std::uint8_t> encode_ppm(const RawImage& image) {
  if (image.data.size() != std::size_t(image.width) * image.height * image.channels)
    throw std::invalid_argument("encode_ppm: data length does not match shape");
  const std::string header = std::string(image.channels == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.data.begin(), image.data.end());
  return out;
}

ImageTensor to_tensor(const RawImage& image) {
  ImageTensor t(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        t.at(c, y, x) = float(image.at(y, x, c)) / 255.0f;
  return t;
}

RawImage to_raw(const ImageTensor& tensor) {
  if (tensor.channels != 1 && tensor.channels != 3)
    throw std::invalid_argument("to_raw: only 1 or 3 channels can be rasterized");
  RawImage image(tensor.width, tensor.height, tensor.channels);
  for (int c = 0; c < tensor.channels; ++c)
    for (int y = 0; y < tensor.height; ++y)
      for (int x = 0; x < tensor.width; ++x) {
        const float v = std::clamp(tensor.at(c, y, x), 0.0f, 1.0f);
        // std::round is half-away-from-zero.
        image.at(y, x, c) = std::uint8_t(std::round(v * 255.0f));
      }
  return image;
}

RawImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CodecError(CodecError::Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const CodecError& e) {
    throw CodecError(e.kind(), path.string() + ": " + e.what());
  }
}

void write_ppm(const std::filesystem::path& path, const RawImage& image) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw CodecError(CodecError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out)
    throw CodecError(CodecError::Kind::Io, "write failed for " + path.string());
}

ImageTensor to_gray(const ImageTensor& image) {
  if (image.channels == 1)
    return image;
  ImageTensor gray(1, image.height, image.width);
  for (int c = 0; c < image.channels; ++c) {
    auto src = image.channel(c);
    for (std::size_t i = 0; i < gray.data.size(); ++i)
      gray.data[i] += src[i];
  }
  for (auto& v : gray.data)
    v /= float(image.channels);
  return gray;
}

ImageTensor crop(const ImageTensor& image, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || h < 0 || w < 0 || y0 + h > image.height || x0 + w > image.width)
    throw std::out_of_range("crop window outside image");
  ImageTensor out(image.channels, h, w);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < h; ++y)
      std::copy_n(&image.data[(std::size_t(c) * image.height + y0 + y) * image.width + x0], w, &out.at(c, y, 0));
  return out;
}

}  // namespace rbsr
