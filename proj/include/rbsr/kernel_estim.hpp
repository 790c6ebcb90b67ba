#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rbsr/degrade.hpp"
#include "rbsr/imageio.hpp"

namespace rbsr {

enum class KernelSolver { Auto, Direct, ConjugateGradient };

struct EstimationConfig {
  int kernel_size = 13;
  double lambda = 1e-4;
  int scale = 4;
  int patch_hr = 192;  ///< HR patch side per grid cell; 0 uses the whole cell
  int grid_rows = 4;
  int grid_cols = 4;
  bool sum_to_one = false;
  double solver_tol = 1e-10;
  int solver_max_iter = 2000;
  SubsamplePhase phase = SubsamplePhase::Centered;
  KernelSolver solver = KernelSolver::Auto;
};

struct EstimatedKernel {
  BlurKernel kernel;
  double residual_rms = 0.0;
  int iterations = 0;
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverNotConverged : public std::runtime_error {
 public:
  SolverNotConverged(int iterations, double residual)
      : std::runtime_error("conjugate gradient did not converge after " + std::to_string(iterations) +
                           " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Linear map k -> subsample(hr conv k), restricted to LR samples whose HR
/// support lies entirely inside the patch. Exposed so callers and tests can
/// inspect the system that estimate_kernel solves.
struct KernelSystem {
  int unknowns = 0;
  std::vector<double> design;  ///< equations x unknowns, row-major
  std::vector<double> target;  ///< one entry per equation

  std::size_t equations() const { return target.size(); }
};

KernelSystem build_kernel_system(const ImageTensor& hr_patch, const ImageTensor& lr_patch, int kernel_size,
                                 int scale, SubsamplePhase phase);

/// argmin_k |S(X k) - y|^2 + lambda |k|^2 via the normal equations.
/// Colour inputs are averaged to one plane first.
EstimatedKernel estimate_kernel(const ImageTensor& hr_patch, const ImageTensor& lr_patch,
                                const EstimationConfig& config);

struct KernelGrid {
  int rows = 0;
  int cols = 0;
  std::vector<EstimatedKernel> cells;  ///< row-major

  const EstimatedKernel& at(int r, int c) const { return cells[std::size_t(r) * cols + c]; }
};

KernelGrid estimate_patchwise(const ImageTensor& hr, const ImageTensor& lr, const EstimationConfig& config);

/// Min-max normalized kernels, x8 nearest-neighbour, 2-pixel white separators.
ImageTensor kernel_grid_render(const KernelGrid& grid);

/// Blocks of "# row col residual_rms" followed by the kernel text format.
std::string format_kernel_dump(const KernelGrid& grid);

}  // namespace rbsr
