#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rbsr/models.hpp"

namespace rbsr {

struct GradCheckReport {
  double max_rel_error = 0.0;
  int coordinates = 0;
  int skipped = 0;    ///< redrawn because the perturbation crossed a ReLU kink
  std::string worst;  ///< coordinate with the largest error
};

/// Scalar objective over a model output: returns the value and d value / d output.
using OutputLoss = std::function<std::pair<double, Tensor4<double>>(const Tensor4<double>&)>;

/// Sign pattern of the input of every ReLU met while running `x` through
/// layers [0, stop]. Perturbations that change it cross a kink.
std::vector<bool> relu_signature(const Model<double>& model, const Tensor4<double>& x, int stop = -1);

/// Kink signature of whatever follows the checked model (a loss network,
/// the sign of a residual). Empty callbacks report nothing.
using KinkProbe = std::function<std::vector<bool>(const Tensor4<double>&)>;

/// Relative error |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

/// Compares backward() against central differences on a fixed random sample
/// of parameter and input coordinates (every parameter tensor is sampled at
/// least once). Runs in 64-bit. A coordinate whose perturbation flips the
/// sign of any ReLU input, or the signature `after` reports for the model
/// output, straddles a kink and is redrawn.
GradCheckReport finite_diff_check(Model<double>& model, const OutputLoss& loss, const Tensor4<double>& input,
                                  double eps = 1e-4, int samples = 200, std::uint64_t seed = 7,
                                  const KinkProbe& after = {});

/// Same check for a plain function of one tensor; `probe` sees the input.
using TensorFunction = std::function<std::pair<double, Tensor4<double>>(const Tensor4<double>&)>;
GradCheckReport finite_diff_check(const TensorFunction& f, const Tensor4<double>& x, double eps = 1e-4,
                                  int samples = 200, std::uint64_t seed = 7, const KinkProbe& probe = {});

}  // namespace rbsr
