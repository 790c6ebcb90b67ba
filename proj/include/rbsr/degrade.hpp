#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rbsr/imageio.hpp"
#include "rbsr/resample.hpp"

namespace rbsr {

/// Odd-sized square convolution kernel, row-major taps.
struct BlurKernel {
  int size = 1;
  std::vector<double> taps{1.0};

  BlurKernel() = default;
  BlurKernel(int size, std::vector<double> taps);

  static BlurKernel delta(int size = 1);

  double& at(int y, int x) { return taps[std::size_t(y) * size + x]; }
  double at(int y, int x) const { return taps[std::size_t(y) * size + x]; }
  int radius() const { return size / 2; }
  double sum() const;
  double norm() const;

  /// Rescales taps to sum to one.
  BlurKernel normalized() const;
};

enum class SubsamplePhase { TopLeft, Centered };

struct DegradationParams {
  BlurKernel kernel;
  int scale = 4;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  Boundary boundary = Boundary::Reflect;
  SubsamplePhase phase = SubsamplePhase::Centered;
};

BlurKernel make_gaussian_kernel(double sigma, int size);

/// True convolution (flipped kernel), same-size output, per channel.
ImageTensor convolve2d(const ImageTensor& image, const BlurKernel& kernel, Boundary boundary);

/// First retained index for a phase: 0 for top-left, floor(s/2) for centered.
int subsample_offset(int s, SubsamplePhase phase);

ImageTensor subsample(const ImageTensor& image, int s, SubsamplePhase phase);

/// Deterministic standard normal sample for (seed, index).
double counter_normal(std::uint64_t seed, std::uint64_t index);

/// y = (x * k) subsampled by s, plus i.i.d. Gaussian noise. No clamping.
ImageTensor degrade(const ImageTensor& image, const DegradationParams& params);

/// Text format: first token is the size, followed by size*size reals, row-major.
/// Lines starting with '#' are comments.
BlurKernel parse_kernel_text(const std::string& text);
std::string format_kernel_text(const BlurKernel& kernel);
BlurKernel read_kernel_file(const std::filesystem::path& path);

/// "gaussian:SIGMA:SIZE" or a path to a kernel text file.
BlurKernel kernel_from_spec(const std::string& spec);

}  // namespace rbsr
