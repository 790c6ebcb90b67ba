#pragma once

#include <cstdint>
#include <string>

#include "rbsr/nn/tensor.hpp"

namespace rbsr::nn {

/// Trainable tensor with its gradient and Adam moments.
/// `rank` is the logical rank stored in checkpoints: 1 for biases held as
/// (c,1,1,1), 2 for dense weights (out,in,1,1), 4 for conv weights.
template <class T>
struct Parameter {
  std::string name;
  int rank = 4;
  Tensor4<T> value;
  Tensor4<T> grad;
  Tensor4<T> m;
  Tensor4<T> v;
  std::int64_t step = 0;

  Parameter() = default;
  Parameter(std::string name_, int rank_, Tensor4<T> value_)
      : name(std::move(name_)), rank(rank_), value(std::move(value_)), grad(value.shape()), m(value.shape()),
        v(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update from param.grad.
template <class T>
void adam_step(Parameter<T>& param, const AdamConfig& config);

}  // namespace rbsr::nn
