#include "rbsr/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rbsr::nn {

int conv_output_size(int in, int kernel, int stride, int pad) {
  if (stride < 1 || pad < 0 || kernel < 1)
    throw std::invalid_argument("conv: invalid stride/pad/kernel");
  const int span = in + 2 * pad - kernel;
  if (span < 0)
    throw std::invalid_argument("conv: input extent " + std::to_string(in) + " smaller than kernel " +
                                std::to_string(kernel));
  return span / stride + 1;
}

namespace {

// Output columns [lo, hi) whose input column ox*stride + kx - pad lies inside [0, in_w).
struct ValidRange {
  int lo, hi;
};

ValidRange valid_outputs(int in, int out, int k_off, int stride, int pad) {
  // need 0 <= o*stride + k_off - pad <= in - 1
  const int num_lo = pad - k_off;
  int lo = num_lo <= 0 ? 0 : (num_lo + stride - 1) / stride;
  const int num_hi = in - 1 + pad - k_off;
  int hi = num_hi < 0 ? 0 : num_hi / stride + 1;
  lo = std::min(lo, out);
  hi = std::clamp(hi, lo, out);
  return {lo, hi};
}

template <class T>
void check_conv_shapes(const Tensor4<T>& x, const Tensor4<T>& w, const char* what) {
  if (x.c() != w.c())
    throw std::invalid_argument(std::string(what) + ": input has " + std::to_string(x.c()) +
                                " channels, weight expects " + std::to_string(w.c()));
}

}  // namespace

template <class T>
Tensor4<T> conv2d(const Tensor4<T>& x, const Tensor4<T>& w, std::span<const T> b, int stride, int pad) {
  check_conv_shapes(x, w, "conv2d");
  if (!b.empty() && b.size() != std::size_t(w.n()))
    throw std::invalid_argument("conv2d: bias length does not match output channels");
  const int oh = conv_output_size(x.h(), w.h(), stride, pad);
  const int ow = conv_output_size(x.w(), w.w(), stride, pad);
  const int in_c = x.c(), out_c = w.n(), kh = w.h(), kw = w.w();
  Tensor4<T> y(x.n(), out_c, oh, ow);

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n(); ++n)
    for (int oc = 0; oc < out_c; ++oc) {
      T* out = y.plane(n, oc);
      std::fill_n(out, std::size_t(oh) * ow, b.empty() ? T(0) : b[oc]);
      for (int ic = 0; ic < in_c; ++ic) {
        const T* in = x.plane(n, ic);
        for (int ky = 0; ky < kh; ++ky) {
          const ValidRange rows = valid_outputs(x.h(), oh, ky, stride, pad);
          for (int kx = 0; kx < kw; ++kx) {
            const T wv = w.at(oc, ic, ky, kx);
            const ValidRange cols = valid_outputs(x.w(), ow, kx, stride, pad);
            for (int oy = rows.lo; oy < rows.hi; ++oy) {
              const T* src = in + std::size_t(oy * stride + ky - pad) * x.w() + (kx - pad);
              T* dst = out + std::size_t(oy) * ow;
              if (stride == 1) {
                for (int ox = cols.lo; ox < cols.hi; ++ox) dst[ox] += wv * src[ox];
              } else {
                for (int ox = cols.lo; ox < cols.hi; ++ox) dst[ox] += wv * src[ox * stride];
              }
            }
          }
        }
      }
    }
  return y;
}

template <class T>
ConvGrads<T> conv2d_grad(const Tensor4<T>& x, const Tensor4<T>& w, const Tensor4<T>& dy, int stride, int pad,
                         bool need_dx) {
  check_conv_shapes(x, w, "conv2d_grad");
  const int oh = conv_output_size(x.h(), w.h(), stride, pad);
  const int ow = conv_output_size(x.w(), w.w(), stride, pad);
  require_same_shape(dy.shape(), Shape4{x.n(), w.n(), oh, ow}, "conv2d_grad dy");
  const int in_c = x.c(), out_c = w.n(), kh = w.h(), kw = w.w();

  ConvGrads<T> g;
  g.dw = Tensor4<T>(w.shape());
  g.db.assign(std::size_t(out_c), T(0));

  for (int oc = 0; oc < out_c; ++oc) {
    T s = 0;
    for (int n = 0; n < x.n(); ++n) {
      const T* d = dy.plane(n, oc);
      for (std::size_t i = 0; i < std::size_t(oh) * ow; ++i) s += d[i];
    }
    g.db[std::size_t(oc)] = s;
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < out_c; ++oc)
    for (int ic = 0; ic < in_c; ++ic)
      for (int ky = 0; ky < kh; ++ky) {
        const ValidRange rows = valid_outputs(x.h(), oh, ky, stride, pad);
        for (int kx = 0; kx < kw; ++kx) {
          const ValidRange cols = valid_outputs(x.w(), ow, kx, stride, pad);
          // Four independent partial sums keep the reduction order fixed.
          T acc[4] = {0, 0, 0, 0};
          for (int n = 0; n < x.n(); ++n) {
            const T* in = x.plane(n, ic);
            const T* d = dy.plane(n, oc);
            for (int oy = rows.lo; oy < rows.hi; ++oy) {
              const T* src = in + std::size_t(oy * stride + ky - pad) * x.w() + (kx - pad);
              const T* drow = d + std::size_t(oy) * ow;
              int ox = cols.lo;
              if (stride == 1) {
                for (; ox + 4 <= cols.hi; ox += 4) {
                  acc[0] += drow[ox] * src[ox];
                  acc[1] += drow[ox + 1] * src[ox + 1];
                  acc[2] += drow[ox + 2] * src[ox + 2];
                  acc[3] += drow[ox + 3] * src[ox + 3];
                }
              }
              for (; ox < cols.hi; ++ox) acc[0] += drow[ox] * src[ox * stride];
            }
          }
          g.dw.at(oc, ic, ky, kx) = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        }
      }

  if (need_dx) {
    g.dx = Tensor4<T>(x.shape());
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < x.n(); ++n)
      for (int ic = 0; ic < in_c; ++ic) {
        T* dst_plane = g.dx.plane(n, ic);
        for (int oc = 0; oc < out_c; ++oc) {
          const T* d = dy.plane(n, oc);
          for (int ky = 0; ky < kh; ++ky) {
            const ValidRange rows = valid_outputs(x.h(), oh, ky, stride, pad);
            for (int kx = 0; kx < kw; ++kx) {
              const T wv = w.at(oc, ic, ky, kx);
              const ValidRange cols = valid_outputs(x.w(), ow, kx, stride, pad);
              for (int oy = rows.lo; oy < rows.hi; ++oy) {
                T* dst = dst_plane + std::size_t(oy * stride + ky - pad) * x.w() + (kx - pad);
                const T* drow = d + std::size_t(oy) * ow;
                if (stride == 1) {
                  for (int ox = cols.lo; ox < cols.hi; ++ox) dst[ox] += wv * drow[ox];
                } else {
                  for (int ox = cols.lo; ox < cols.hi; ++ox) dst[ox * stride] += wv * drow[ox];
                }
              }
            }
          }
        }
      }
  }
  return g;
}

template <class T>
Tensor4<T> activation(const Tensor4<T>& x, Activation kind) {
  Tensor4<T> y(x.shape());
  if (kind == Activation::Relu) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
  }
  return y;
}

template <class T>
Tensor4<T> activation_grad(const Tensor4<T>& x, const Tensor4<T>& dy, Activation kind) {
  require_same_shape(x.shape(), dy.shape(), "activation_grad");
  Tensor4<T> dx(x.shape());
  if (kind == Activation::Relu) {
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T s = T(1) / (T(1) + std::exp(-x[i]));
      dx[i] = s * (T(1) - s) * dy[i];
    }
  }
  return dx;
}

template <class T>
Tensor4<T> dense(const Tensor4<T>& x, const Tensor4<T>& w, std::span<const T> b) {
  const std::size_t in = std::size_t(x.c()) * x.h() * x.w();
  if (in != std::size_t(w.c()) * w.h() * w.w())
    throw std::invalid_argument("dense: input width " + std::to_string(in) + " does not match weight columns " +
                                std::to_string(w.c()));
  if (!b.empty() && b.size() != std::size_t(w.n()))
    throw std::invalid_argument("dense: bias length mismatch");
  const int out = w.n();
  Tensor4<T> y(x.n(), out, 1, 1);
  for (int n = 0; n < x.n(); ++n) {
    const T* xi = x.plane(n, 0);
    for (int o = 0; o < out; ++o) {
      const T* wo = w.plane(o, 0);
      T s = b.empty() ? T(0) : b[std::size_t(o)];
      for (std::size_t k = 0; k < in; ++k) s += xi[k] * wo[k];
      y.at(n, o, 0, 0) = s;
    }
  }
  return y;
}

template <class T>
DenseGrads<T> dense_grad(const Tensor4<T>& x, const Tensor4<T>& w, const Tensor4<T>& dy) {
  const std::size_t in = std::size_t(x.c()) * x.h() * x.w();
  if (in != std::size_t(w.c()) * w.h() * w.w())
    throw std::invalid_argument("dense_grad: input width mismatch");
  require_same_shape(dy.shape(), Shape4{x.n(), w.n(), 1, 1}, "dense_grad dy");
  const int out = w.n();
  DenseGrads<T> g{Tensor4<T>(x.shape()), Tensor4<T>(w.shape()), std::vector<T>(std::size_t(out), T(0))};
  for (int n = 0; n < x.n(); ++n) {
    const T* xi = x.plane(n, 0);
    T* dxi = g.dx.plane(n, 0);
    for (int o = 0; o < out; ++o) {
      const T d = dy.at(n, o, 0, 0);
      const T* wo = w.plane(o, 0);
      T* dwo = g.dw.plane(o, 0);
      g.db[std::size_t(o)] += d;
      for (std::size_t k = 0; k < in; ++k) {
        dwo[k] += d * xi[k];
        dxi[k] += d * wo[k];
      }
    }
  }
  return g;
}

template <class T>
Tensor4<T> pixel_shuffle(const Tensor4<T>& x, int r) {
  if (r < 1 || x.c() % (r * r) != 0)
    throw std::invalid_argument("pixel_shuffle: channels " + std::to_string(x.c()) + " not divisible by " +
                                std::to_string(r * r));
  const int oc = x.c() / (r * r);
  Tensor4<T> y(x.n(), oc, x.h() * r, x.w() * r);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < oc; ++c)
      for (int sy = 0; sy < r; ++sy)
        for (int sx = 0; sx < r; ++sx) {
          const T* src = x.plane(n, c * r * r + sy * r + sx);
          for (int h = 0; h < x.h(); ++h)
            for (int w = 0; w < x.w(); ++w)
              y.at(n, c, h * r + sy, w * r + sx) = src[std::size_t(h) * x.w() + w];
        }
  return y;
}

template <class T>
Tensor4<T> pixel_unshuffle(const Tensor4<T>& y, int r) {
  if (r < 1 || y.h() % r != 0 || y.w() % r != 0)
    throw std::invalid_argument("pixel_unshuffle: spatial size not divisible by factor");
  Tensor4<T> x(y.n(), y.c() * r * r, y.h() / r, y.w() / r);
  for (int n = 0; n < y.n(); ++n)
    for (int c = 0; c < y.c(); ++c)
      for (int sy = 0; sy < r; ++sy)
        for (int sx = 0; sx < r; ++sx) {
          T* dst = x.plane(n, c * r * r + sy * r + sx);
          for (int h = 0; h < x.h(); ++h)
            for (int w = 0; w < x.w(); ++w)
              dst[std::size_t(h) * x.w() + w] = y.at(n, c, h * r + sy, w * r + sx);
        }
  return x;
}

#define RBSR_INSTANTIATE(T)                                                                                  \
  template Tensor4<T> conv2d<T>(const Tensor4<T>&, const Tensor4<T>&, std::span<const T>, int, int);         \
  template ConvGrads<T> conv2d_grad<T>(const Tensor4<T>&, const Tensor4<T>&, const Tensor4<T>&, int, int,    \
                                       bool);                                                                \
  template Tensor4<T> activation<T>(const Tensor4<T>&, Activation);                                          \
  template Tensor4<T> activation_grad<T>(const Tensor4<T>&, const Tensor4<T>&, Activation);                  \
  template Tensor4<T> dense<T>(const Tensor4<T>&, const Tensor4<T>&, std::span<const T>);                    \
  template DenseGrads<T> dense_grad<T>(const Tensor4<T>&, const Tensor4<T>&, const Tensor4<T>&);             \
  template Tensor4<T> pixel_shuffle<T>(const Tensor4<T>&, int);                                              \
  template Tensor4<T> pixel_unshuffle<T>(const Tensor4<T>&, int);

RBSR_INSTANTIATE(float)
RBSR_INSTANTIATE(double)

}  // namespace rbsr::nn
