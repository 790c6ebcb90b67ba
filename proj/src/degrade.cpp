#include "rbsr/degrade.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rbsr {

BlurKernel::BlurKernel(int size_, std::vector<double> taps_) : size(size_), taps(std::move(taps_)) {
  if (size < 1 || size % 2 == 0)
    throw std::invalid_argument("BlurKernel: size must be odd and >= 1");
  if (taps.size() != std::size_t(size) * size)
    throw std::invalid_argument("BlurKernel: expected size*size taps");
}

BlurKernel BlurKernel::delta(int size) {
  std::vector<double> taps(std::size_t(size) * size, 0.0);
  BlurKernel k(size, std::move(taps));
  k.at(size / 2, size / 2) = 1.0;
  return k;
}

double BlurKernel::sum() const {
  double s = 0.0;
  for (double t : taps) s += t;
  return s;
}

double BlurKernel::norm() const {
  double s = 0.0;
  for (double t : taps) s += t * t;
  return std::sqrt(s);
}

BlurKernel BlurKernel::normalized() const {
  const double s = sum();
  if (s == 0.0)
    throw std::runtime_error("BlurKernel: cannot normalize zero-sum kernel");
  BlurKernel k = *this;
  for (double& t : k.taps) t /= s;
  return k;
}

BlurKernel make_gaussian_kernel(double sigma, int size) {
  if (size < 1 || size % 2 == 0)
    throw std::invalid_argument("make_gaussian_kernel: size must be odd");
  if (!(sigma > 0.0))
    throw std::invalid_argument("make_gaussian_kernel: sigma must be positive");
  const int r = size / 2;
  std::vector<double> taps(std::size_t(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dy = y - r, dx = x - r;
      taps[std::size_t(y) * size + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  return BlurKernel(size, std::move(taps)).normalized();
}

ImageTensor convolve2d(const ImageTensor& image, const BlurKernel& kernel, Boundary boundary) {
  const int r = kernel.radius();
  ImageTensor out(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) {
        double acc = 0.0;
        for (int u = 0; u < kernel.size; ++u) {
          const int sy = boundary_index(y - (u - r), image.height, boundary);
          for (int v = 0; v < kernel.size; ++v) {
            const int sx = boundary_index(x - (v - r), image.width, boundary);
            acc += kernel.at(u, v) * image.at(c, sy, sx);
          }
        }
        out.at(c, y, x) = float(acc);
      }
  return out;
}

int subsample_offset(int s, SubsamplePhase phase) {
  return phase == SubsamplePhase::Centered ? s / 2 : 0;
}

ImageTensor subsample(const ImageTensor& image, int s, SubsamplePhase phase) {
  if (s < 1)
    throw std::invalid_argument("subsample: factor must be >= 1");
  if (image.height < s || image.width < s)
    throw std::invalid_argument("subsample: image smaller than factor");
  const int off = subsample_offset(s, phase);
  ImageTensor out(image.channels, image.height / s, image.width / s);
  for (int c = 0; c < out.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        out.at(c, y, x) = image.at(c, y * s + off, x * s + off);
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits) {
  // (0, 1): 53 random bits, offset by half an ulp so log() never sees zero.
  return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t key = splitmix64(seed ^ 0x5DEECE66DULL);
  const double u1 = unit_open(splitmix64(key ^ (2 * index)));
  const double u2 = unit_open(splitmix64(key ^ (2 * index + 1)));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ImageTensor degrade(const ImageTensor& image, const DegradationParams& params) {
  if (params.scale < 1)
    throw std::invalid_argument("degrade: scale must be >= 1");
  if (params.noise_sigma < 0.0)
    throw std::invalid_argument("degrade: noise sigma must be >= 0");
  ImageTensor out = subsample(convolve2d(image, params.kernel, params.boundary), params.scale, params.phase);
  if (params.noise_sigma > 0.0)
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] += float(params.noise_sigma * counter_normal(params.seed, i));
  return out;
}

BlurKernel parse_kernel_text(const std::string& text) {
  std::istringstream lines(text);
  std::string line, body;
  while (std::getline(lines, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] == '#')
      continue;
    body += line + "\n";
  }
  std::istringstream in(body);
  int size = 0;
  if (!(in >> size))
    throw std::runtime_error("kernel text: missing size");
  if (size < 1 || size % 2 == 0)
    throw std::runtime_error("kernel text: size must be odd and >= 1");
  std::vector<double> taps(std::size_t(size) * size);
  for (auto& t : taps)
    if (!(in >> t))
      throw std::runtime_error("kernel text: expected " + std::to_string(taps.size()) + " taps");
  return BlurKernel(size, std::move(taps));
}

std::string format_kernel_text(const BlurKernel& kernel) {
  std::ostringstream out;
  out << kernel.size << "\n" << std::setprecision(9);
  for (int y = 0; y < kernel.size; ++y) {
    for (int x = 0; x < kernel.size; ++x)
      out << (x ? " " : "") << kernel.at(y, x);
    out << "\n";
  }
  return out.str();
}

BlurKernel read_kernel_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open kernel file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kernel_text(ss.str());
}

BlurKernel kernel_from_spec(const std::string& spec) {
  constexpr std::string_view prefix = "gaussian:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string rest = spec.substr(prefix.size());
    const auto colon = rest.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("kernel spec must be gaussian:SIGMA:SIZE");
    return make_gaussian_kernel(std::stod(rest.substr(0, colon)), std::stoi(rest.substr(colon + 1)));
  }
  return read_kernel_file(spec);
}

}  // namespace rbsr
