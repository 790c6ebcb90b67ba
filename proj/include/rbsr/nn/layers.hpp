#pragma once

#include <span>
#include <vector>

#include "rbsr/nn/tensor.hpp"

namespace rbsr::nn {

/// Output extent of a strided, zero-padded window: floor((in + 2 pad - k) / stride) + 1.
int conv_output_size(int in, int kernel, int stride, int pad);

/// Cross-correlation (no kernel flip). w is [outC, inC, kh, kw]; b has outC entries.
template <class T>
Tensor4<T> conv2d(const Tensor4<T>& x, const Tensor4<T>& w, std::span<const T> b, int stride, int pad);

template <class T>
struct ConvGrads {
  Tensor4<T> dx;
  Tensor4<T> dw;
  std::vector<T> db;
};

/// Exact gradients of conv2d given the upstream gradient dy. dx is skipped
/// (left empty) when need_dx is false.
template <class T>
ConvGrads<T> conv2d_grad(const Tensor4<T>& x, const Tensor4<T>& w, const Tensor4<T>& dy, int stride, int pad,
                         bool need_dx = true);

enum class Activation { Relu, Sigmoid };

template <class T>
Tensor4<T> activation(const Tensor4<T>& x, Activation kind);

/// dx for the activation evaluated at input x.
template <class T>
Tensor4<T> activation_grad(const Tensor4<T>& x, const Tensor4<T>& dy, Activation kind);

/// y = x W^T + b, with each batch item of x flattened. w is [out, in, 1, 1];
/// the result has shape (n, out, 1, 1).
template <class T>
Tensor4<T> dense(const Tensor4<T>& x, const Tensor4<T>& w, std::span<const T> b);

template <class T>
struct DenseGrads {
  Tensor4<T> dx;  ///< same shape as x
  Tensor4<T> dw;
  std::vector<T> db;
};

template <class T>
DenseGrads<T> dense_grad(const Tensor4<T>& x, const Tensor4<T>& w, const Tensor4<T>& dy);

/// (n, c r^2, h, w) -> (n, c, h r, w r);
/// out[n][c][h r + dy][w r + dx] = in[n][c r^2 + dy r + dx][h][w].
template <class T>
Tensor4<T> pixel_shuffle(const Tensor4<T>& x, int r);

/// Inverse permutation of pixel_shuffle, which is also its gradient.
template <class T>
Tensor4<T> pixel_unshuffle(const Tensor4<T>& y, int r);

}  // namespace rbsr::nn
