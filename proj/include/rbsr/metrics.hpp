#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbsr/imageio.hpp"

namespace rbsr {

struct SsimConfig {
  int window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// 10 log10(peak^2 / MSE) over all samples; +infinity when MSE is zero.
double psnr(const ImageTensor& a, const ImageTensor& b, double peak = 1.0);
/// Same on raw 64-bit samples.
double psnr(std::span<const double> a, std::span<const double> b, double peak = 1.0);

double mse(const ImageTensor& a, const ImageTensor& b);
double mean_abs_diff(const ImageTensor& a, const ImageTensor& b);

/// Gaussian-window structural similarity over the valid region (no
/// padding), computed per channel and averaged across channels.
double ssim(const ImageTensor& a, const ImageTensor& b, const SsimConfig& config = {});

/// Normalized 1-D Gaussian used for the separable SSIM window.
std::vector<double> gaussian_window_1d(int size, double sigma);

struct PairMetrics {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  std::string error;  ///< empty on success
};

using PathPair = std::pair<std::filesystem::path, std::filesystem::path>;

std::vector<PairMetrics> evaluate_pairs(const std::vector<PathPair>& pairs, double peak, const SsimConfig& config);

/// "name,psnr,ssim,error" rows followed by a mean row over valid pairs.
/// An empty input yields the header alone.
std::string metrics_csv(const std::vector<PairMetrics>& rows);

/// Reads "output_path<TAB>reference_path" lines; relative paths resolve
/// against the list file's directory.
std::vector<PathPair> read_pair_list(const std::filesystem::path& path);

/// Formats a metric value, writing "inf" for the infinite sentinel.
std::string format_metric(double v);

}  // namespace rbsr
