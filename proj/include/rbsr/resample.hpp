#pragma once

#include <vector>

#include "rbsr/imageio.hpp"

namespace rbsr {

enum class Boundary { Reflect, Clamp };

/// Maps an out-of-range index into [0, n). Reflect mirrors about the edge
/// sample without repeating it (-1 -> 1, n -> n-2).
int boundary_index(int i, int n, Boundary mode);

struct ResampleSpec {
  int scale_num = 1;
  int scale_den = 1;
  double kernel_a = -0.5;
  bool antialias = true;
  Boundary boundary = Boundary::Reflect;
};

/// Keys cubic convolution kernel.
double cubic_weight(double t, double a);

/// Output extent along one axis: round(n * num / den).
int resampled_size(int n, int num, int den);

/// Normalized taps for one output sample along one axis.
struct AxisTaps {
  std::vector<int> index;
  std::vector<double> weight;
};

/// Taps for every output position of a 1-D resampling from `in` to `out`
/// samples. Source coordinate of output i is (i + 0.5) * in / out - 0.5.
std::vector<AxisTaps> axis_taps(int in, int out, double a, bool antialias, Boundary boundary);

ImageTensor resize(const ImageTensor& image, const ResampleSpec& spec);

/// Antialiased a = -0.5 bicubic downscale by four.
ImageTensor downsample_bicubic_x4(const ImageTensor& image);

/// Non-antialiased a = -0.5 bicubic upscale by four.
ImageTensor upsample_bicubic_x4(const ImageTensor& image);

}  // namespace rbsr
