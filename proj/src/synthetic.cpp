#include "rbsr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace rbsr {

namespace {

double uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform(rng); }

constexpr int kSuper = 2;
constexpr int kMaxLeaves = 20000;

}  // namespace

ImageTensor synthetic_image(int height, int width, std::uint64_t seed) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("synthetic_image: size must be positive");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 1);
  const int H = height * kSuper, W = width * kSuper;
  std::vector<float> canvas(std::size_t(3) * H * W, -1.0f);
  std::size_t uncovered = std::size_t(H) * W;

  const double rmin = 4.0;
  const double rmax = std::max(rmin, 0.3 * std::min(height, width));
  for (int leaf = 0; leaf < kMaxLeaves && uncovered > 0; ++leaf) {
    // density proportional to r^-3 on [rmin, rmax]
    const double u = uniform(rng);
    const double r = 1.0 / std::sqrt((1.0 - u) / (rmin * rmin) + u / (rmax * rmax));
    const double cy = uniform(rng, -10.0, height + 10.0), cx = uniform(rng, -10.0, width + 10.0);
    double color[3], gy[3], gx[3];
    for (int c = 0; c < 3; ++c) {
      color[c] = uniform(rng, 0.05, 0.95);
      gy[c] = uniform(rng, -0.004, 0.004);
      gx[c] = uniform(rng, -0.004, 0.004);
    }
    const int y0 = std::max(0, int(std::floor((cy - r) * kSuper)));
    const int y1 = std::min(H - 1, int(std::ceil((cy + r) * kSuper)));
    const int x0 = std::max(0, int(std::floor((cx - r) * kSuper)));
    const int x1 = std::min(W - 1, int(std::ceil((cx + r) * kSuper)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const std::size_t i = std::size_t(y) * W + x;
        if (canvas[i] >= 0.0f)
          continue;
        const double py = double(y) / kSuper - cy, px = double(x) / kSuper - cx;
        if (py * py + px * px > r * r)
          continue;
        for (int c = 0; c < 3; ++c)
          canvas[std::size_t(c) * H * W + i] = float(std::clamp(color[c] + gy[c] * py + gx[c] * px, 0.02, 0.98));
        --uncovered;
      }
  }

  ImageTensor img(3, height, width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double s = 0.0;
        for (int dy = 0; dy < kSuper; ++dy)
          for (int dx = 0; dx < kSuper; ++dx) {
            const float v = canvas[std::size_t(c) * H * W + std::size_t(y * kSuper + dy) * W + x * kSuper + dx];
            s += v < 0.0f ? 0.5 : v;
          }
        img.at(c, y, x) = float(s / (kSuper * kSuper));
      }
  return img;
}

}  // namespace rbsr
