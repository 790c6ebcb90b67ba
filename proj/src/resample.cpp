#include "rbsr/resample.hpp"

#include <cmath>
#include <stdexcept>

namespace rbsr {

int boundary_index(int i, int n, Boundary mode) {
  if (i >= 0 && i < n)
    return i;
  if (mode == Boundary::Clamp || n == 1)
    return i < 0 ? 0 : n - 1;
  const int period = 2 * (n - 1);
  int m = i % period;
  if (m < 0)
    m += period;
  return m < n ? m : period - m;
}

double cubic_weight(double t, double a) {
  const double x = std::abs(t);
  if (x <= 1.0)
    return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0)
    return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

int resampled_size(int n, int num, int den) {
  return int(std::lround(double(n) * num / den));
}

std::vector<AxisTaps> axis_taps(int in, int out, double a, bool antialias, Boundary boundary) {
  const double ratio = double(in) / out;
  // Downscaling with antialias widens the kernel by the scale ratio.
  const double stretch = (antialias && ratio > 1.0) ? ratio : 1.0;
  const double support = 2.0 * stretch;

  std::vector<AxisTaps> taps(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * ratio - 0.5;
    const int first = int(std::floor(center - support)) + 1;
    const int last = int(std::ceil(center + support)) - 1;
    AxisTaps& t = taps[std::size_t(i)];
    double sum = 0.0;
    for (int j = first; j <= last; ++j) {
      const double w = cubic_weight((j - center) / stretch, a);
      if (w == 0.0)
        continue;
      t.index.push_back(boundary_index(j, in, boundary));
      t.weight.push_back(w);
      sum += w;
    }
    if (sum == 0.0)
      throw std::runtime_error("axis_taps: zero weight sum");
    for (auto& w : t.weight)
      w /= sum;
  }
  return taps;
}

ImageTensor resize(const ImageTensor& image, const ResampleSpec& spec) {
  if (spec.scale_num < 1 || spec.scale_den < 1)
    throw std::invalid_argument("resize: scale terms must be >= 1");
  if (spec.kernel_a > 0.0)
    throw std::invalid_argument("resize: cubic parameter must be <= 0");
  const int out_w = resampled_size(image.width, spec.scale_num, spec.scale_den);
  const int out_h = resampled_size(image.height, spec.scale_num, spec.scale_den);
  if (out_w < 1 || out_h < 1 || image.width < 1 || image.height < 1)
    throw std::invalid_argument("resize: degenerate output size");

  const auto row_taps = axis_taps(image.width, out_w, spec.kernel_a, spec.antialias, spec.boundary);
  const auto col_taps = axis_taps(image.height, out_h, spec.kernel_a, spec.antialias, spec.boundary);

  // Horizontal pass along rows, then vertical pass along columns.
  ImageTensor tmp(image.channels, image.height, out_w);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y) {
      const float* src = &image.data[(std::size_t(c) * image.height + y) * image.width];
      for (int x = 0; x < out_w; ++x) {
        const AxisTaps& t = row_taps[std::size_t(x)];
        double acc = 0.0;
        for (std::size_t k = 0; k < t.index.size(); ++k)
          acc += t.weight[k] * src[t.index[k]];
        tmp.at(c, y, x) = float(acc);
      }
    }

  ImageTensor out(image.channels, out_h, out_w);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < out_h; ++y) {
      const AxisTaps& t = col_taps[std::size_t(y)];
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.index.size(); ++k)
          acc += t.weight[k] * tmp.at(c, t.index[k], x);
        out.at(c, y, x) = float(acc);
      }
    }
  return out;
}

ImageTensor downsample_bicubic_x4(const ImageTensor& image) {
  if (image.height < 8 || image.width < 8)
    throw std::invalid_argument("downsample_bicubic_x4: image must be at least 8x8");
  return resize(image, ResampleSpec{1, 4, -0.5, true, Boundary::Reflect});
}

ImageTensor upsample_bicubic_x4(const ImageTensor& image) {
  return resize(image, ResampleSpec{4, 1, -0.5, false, Boundary::Reflect});
}

}  // namespace rbsr
