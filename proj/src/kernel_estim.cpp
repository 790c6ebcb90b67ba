#include "rbsr/kernel_estim.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace rbsr {

KernelSystem build_kernel_system(const ImageTensor& hr_patch, const ImageTensor& lr_patch, int kernel_size,
                                 int scale, SubsamplePhase phase) {
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw EstimationError("kernel size must be odd");
  if (scale < 1)
    throw EstimationError("scale must be >= 1");
  const ImageTensor hr = to_gray(hr_patch);
  const ImageTensor lr = to_gray(lr_patch);
  const int r = kernel_size / 2;
  const int off = subsample_offset(scale, phase);

  KernelSystem sys;
  sys.unknowns = kernel_size * kernel_size;
  for (int i = 0; i < lr.height; ++i) {
    const int py = i * scale + off;
    if (py - r < 0 || py + r >= hr.height)
      continue;
    for (int j = 0; j < lr.width; ++j) {
      const int px = j * scale + off;
      if (px - r < 0 || px + r >= hr.width)
        continue;
      // Convolution flips the kernel: tap (u, v) reads hr(py - (u - r), px - (v - r)).
      for (int u = 0; u < kernel_size; ++u)
        for (int v = 0; v < kernel_size; ++v)
          sys.design.push_back(hr.at(0, py - (u - r), px - (v - r)));
      sys.target.push_back(lr.at(0, i, j));
    }
  }
  return sys;
}

namespace {

using Matrix = std::vector<double>;  // square, row-major

// Returns false if the matrix is not positive definite.
bool cholesky_solve(const Matrix& a, int n, std::vector<double>& x) {
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(a.data(), n, n);
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    return false;
  Eigen::Map<Eigen::VectorXd> v(x.data(), n);
  v = llt.solve(Eigen::VectorXd(v));
  return true;
}

void matvec(const Matrix& a, int n, const std::vector<double>& x, std::vector<double>& y) {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < n; ++k)
      s += a[std::size_t(i) * n + k] * x[k];
    y[i] = s;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Conjugate gradient on a symmetric positive (semi)definite system, from x = 0.
int conjugate_gradient(const Matrix& a, int n, const std::vector<double>& b, std::vector<double>& x,
                       double tol, int max_iter) {
  x.assign(std::size_t(n), 0.0);
  std::vector<double> r = b, p = b, q(static_cast<std::size_t>(n));
  double rr = dot(r, r);
  const double b_norm = std::sqrt(rr);
  if (b_norm == 0.0)
    return 0;
  int it = 0;
  while (std::sqrt(rr) > tol * b_norm) {
    if (it == max_iter)
      throw SolverNotConverged(it, std::sqrt(rr) / b_norm);
    ++it;
    matvec(a, n, p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0))
      throw SolverNotConverged(it, std::sqrt(rr) / b_norm);
    const double alpha = rr / pq;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (int i = 0; i < n; ++i)
      p[i] = r[i] + beta * p[i];
  }
  return it;
}

}  // namespace

EstimatedKernel estimate_kernel(const ImageTensor& hr_patch, const ImageTensor& lr_patch,
                                const EstimationConfig& config) {
  if (config.lambda < 0.0)
    throw EstimationError("lambda must be >= 0");
  const KernelSystem sys =
      build_kernel_system(hr_patch, lr_patch, config.kernel_size, config.scale, config.phase);
  const int n = sys.unknowns;
  const std::size_t m = sys.equations();
  if (m < std::size_t(n))
    throw EstimationError("underdetermined kernel system: " + std::to_string(m) + " usable equations for " +
                          std::to_string(n) + " unknowns; enlarge the patch");

  // Normal equations (A^T A + lambda I) k = A^T y.
  Matrix gram(std::size_t(n) * n, 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  for (std::size_t e = 0; e < m; ++e) {
    const double* row = &sys.design[e * n];
    for (int i = 0; i < n; ++i) {
      rhs[i] += row[i] * sys.target[e];
      double* g = &gram[std::size_t(i) * n];
      for (int j = 0; j <= i; ++j)
        g[j] += row[i] * row[j];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j)
      gram[std::size_t(j) * n + i] = gram[std::size_t(i) * n + j];
    gram[std::size_t(i) * n + i] += config.lambda;
  }

  EstimatedKernel result;
  std::vector<double> k = rhs;
  const bool direct = config.solver == KernelSolver::Direct ||
                      (config.solver == KernelSolver::Auto && config.kernel_size <= 21);
  if (!direct || !cholesky_solve(gram, n, k))
    result.iterations = conjugate_gradient(gram, n, rhs, k, config.solver_tol, config.solver_max_iter);

  if (config.sum_to_one) {
    double s = 0.0;
    for (double t : k) s += t;
    const double shift = (1.0 - s) / n;
    for (double& t : k) t += shift;
  }

  double sq = 0.0;
  for (std::size_t e = 0; e < m; ++e) {
    double pred = 0.0;
    const double* row = &sys.design[e * n];
    for (int i = 0; i < n; ++i) pred += row[i] * k[i];
    sq += (pred - sys.target[e]) * (pred - sys.target[e]);
  }
  result.residual_rms = std::sqrt(sq / double(m));
  result.kernel = BlurKernel(config.kernel_size, std::move(k));
  return result;
}

KernelGrid estimate_patchwise(const ImageTensor& hr, const ImageTensor& lr, const EstimationConfig& config) {
  const int s = config.scale;
  if (s < 1 || config.grid_rows < 1 || config.grid_cols < 1)
    throw EstimationError("invalid grid or scale");
  if (std::abs(hr.height - s * lr.height) >= s || std::abs(hr.width - s * lr.width) >= s)
    throw EstimationError("HR dimensions must equal scale x LR dimensions");
  if (config.patch_hr > 0 && config.patch_hr % s != 0)
    throw EstimationError("patch size must be a multiple of the scale");

  const int usable_h = std::min(hr.height, s * lr.height);
  const int usable_w = std::min(hr.width, s * lr.width);
  const int cell_h = (usable_h / config.grid_rows) / s * s;
  const int cell_w = (usable_w / config.grid_cols) / s * s;
  const int patch_h = config.patch_hr > 0 ? config.patch_hr : cell_h;
  const int patch_w = config.patch_hr > 0 ? config.patch_hr : cell_w;
  if (cell_h < 1 || cell_w < 1 || patch_h > cell_h || patch_w > cell_w)
    throw EstimationError("grid " + std::to_string(config.grid_rows) + "x" + std::to_string(config.grid_cols) +
                          " with patch " + std::to_string(patch_h) + " does not fit a " + std::to_string(usable_h) +
                          "x" + std::to_string(usable_w) + " image");
  if (patch_h < s * config.kernel_size || patch_w < s * config.kernel_size)
    throw EstimationError("patch too small for kernel size (need >= scale x kernel_size)");

  KernelGrid grid;
  grid.rows = config.grid_rows;
  grid.cols = config.grid_cols;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const int y0 = r * cell_h + (cell_h - patch_h) / 2 / s * s;
      const int x0 = c * cell_w + (cell_w - patch_w) / 2 / s * s;
      const ImageTensor hr_patch = crop(hr, y0, x0, patch_h, patch_w);
      const ImageTensor lr_patch = crop(lr, y0 / s, x0 / s, patch_h / s, patch_w / s);
      grid.cells.push_back(estimate_kernel(hr_patch, lr_patch, config));
    }
  return grid;
}

ImageTensor kernel_grid_render(const KernelGrid& grid) {
  if (grid.rows < 1 || grid.cols < 1 || grid.cells.empty())
    throw std::invalid_argument("kernel_grid_render: empty grid");
  constexpr int kMag = 8;
  constexpr int kSep = 2;
  int ksize = 0;
  for (const auto& cell : grid.cells) ksize = std::max(ksize, cell.kernel.size);
  const int tile = kMag * ksize;
  ImageTensor out(1, grid.rows * tile + (grid.rows + 1) * kSep, grid.cols * tile + (grid.cols + 1) * kSep, 1.0f);

  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const BlurKernel& k = grid.at(r, c).kernel;
      const auto [lo_it, hi_it] = std::minmax_element(k.taps.begin(), k.taps.end());
      const double lo = *lo_it, range = *hi_it - *lo_it;
      const int oy = kSep + r * (tile + kSep);
      const int ox = kSep + c * (tile + kSep);
      const int pad = (ksize - k.size) / 2 * kMag;
      for (int y = 0; y < tile; ++y)
        for (int x = 0; x < tile; ++x) {
          const int ky = (y - pad) / kMag, kx = (x - pad) / kMag;
          float v = 0.0f;
          if (y >= pad && x >= pad && ky < k.size && kx < k.size && range > 0.0)
            v = float((k.at(ky, kx) - lo) / range);
          out.at(0, oy + y, ox + x) = v;
        }
    }
  return out;
}

std::string format_kernel_dump(const KernelGrid& grid) {
  std::ostringstream out;
  out.precision(9);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      out << "# " << r << " " << c << " " << grid.at(r, c).residual_rms << "\n";
      out << format_kernel_text(grid.at(r, c).kernel);
    }
  return out.str();
}

}  // namespace rbsr
