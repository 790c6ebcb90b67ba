#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbsr/imageio.hpp"

namespace rbsr::nn {

struct Shape4 {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t count() const { return std::size_t(n) * c * h * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

/// Dense 4-D tensor, N-major then C, H, W.
template <class T>
class Tensor4 {
 public:
  using value_type = T;

  Tensor4() = default;
  explicit Tensor4(Shape4 shape, T fill = T(0));
  Tensor4(int n, int c, int h, int w, T fill = T(0)) : Tensor4(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int n, int c, int h, int w) const {
    return ((std::size_t(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  /// Pointer to the (n, c) plane.
  T* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data, new shape with equal element count.
  Tensor4 reshaped(Shape4 shape) const;

  template <class U>
  Tensor4<U> cast() const {
    Tensor4<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = U(data_[i]);
    return out;
  }

  bool operator==(const Tensor4&) const = default;

 private:
  Shape4 shape_;
  std::vector<T> data_;
};

/// Throws with the given context if shapes differ.
void require_same_shape(const Shape4& a, const Shape4& b, const std::string& context);

/// Stacks equally shaped images into an (n, c, h, w) batch.
template <class T>
Tensor4<T> batch_from_images(std::span<const ImageTensor> images);

/// Item `index` of the batch as an image.
template <class T>
ImageTensor image_from_batch(const Tensor4<T>& batch, int index = 0);

/// Concatenates along channels.
template <class T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b);

/// Splits channels [0, first) and [first, c).
template <class T>
void split_channels(const Tensor4<T>& x, int first, Tensor4<T>& a, Tensor4<T>& b);

}  // namespace rbsr::nn
