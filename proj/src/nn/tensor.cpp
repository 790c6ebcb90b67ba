#include "rbsr/nn/tensor.hpp"

#include <algorithm>

namespace rbsr::nn {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

template <class T>
Tensor4<T>::Tensor4(Shape4 shape, T fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
    throw std::invalid_argument("Tensor4: negative dimension " + shape.str());
  data_.assign(shape.count(), fill);
}

template <class T>
Tensor4<T> Tensor4<T>::reshaped(Shape4 shape) const {
  if (shape.count() != size())
    throw std::invalid_argument("reshape " + shape_.str() + " -> " + shape.str() + " changes element count");
  Tensor4 out = *this;
  out.shape_ = shape;
  return out;
}

void require_same_shape(const Shape4& a, const Shape4& b, const std::string& context) {
  if (!(a == b))
    throw std::invalid_argument(context + ": shape mismatch " + a.str() + " vs " + b.str());
}

template <class T>
Tensor4<T> batch_from_images(std::span<const ImageTensor> images) {
  if (images.empty())
    throw std::invalid_argument("batch_from_images: empty batch");
  const ImageTensor& first = images.front();
  Tensor4<T> out(int(images.size()), first.channels, first.height, first.width);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(first))
      throw std::invalid_argument("batch_from_images: images differ in shape");
    std::copy(images[i].data.begin(), images[i].data.end(), out.plane(int(i), 0));
  }
  return out;
}

template <class T>
ImageTensor image_from_batch(const Tensor4<T>& batch, int index) {
  ImageTensor out(batch.c(), batch.h(), batch.w());
  const T* src = batch.plane(index, 0);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = float(src[i]);
  return out;
}

template <class T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw std::invalid_argument("concat_channels: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Tensor4<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  const std::size_t pa = std::size_t(a.c()) * a.h() * a.w();
  const std::size_t pb = std::size_t(b.c()) * b.h() * b.w();
  for (int n = 0; n < a.n(); ++n) {
    std::copy_n(a.plane(n, 0), pa, out.plane(n, 0));
    std::copy_n(b.plane(n, 0), pb, out.plane(n, a.c()));
  }
  return out;
}

template <class T>
void split_channels(const Tensor4<T>& x, int first, Tensor4<T>& a, Tensor4<T>& b) {
  a = Tensor4<T>(x.n(), first, x.h(), x.w());
  b = Tensor4<T>(x.n(), x.c() - first, x.h(), x.w());
  const std::size_t pa = std::size_t(first) * x.h() * x.w();
  const std::size_t pb = std::size_t(x.c() - first) * x.h() * x.w();
  for (int n = 0; n < x.n(); ++n) {
    std::copy_n(x.plane(n, 0), pa, a.plane(n, 0));
    std::copy_n(x.plane(n, first), pb, b.plane(n, 0));
  }
}

#define RBSR_INSTANTIATE(T)                                                             \
  template class Tensor4<T>;                                                            \
  template Tensor4<T> batch_from_images<T>(std::span<const ImageTensor>);              \
  template ImageTensor image_from_batch<T>(const Tensor4<T>&, int);                     \
  template Tensor4<T> concat_channels<T>(const Tensor4<T>&, const Tensor4<T>&);         \
  template void split_channels<T>(const Tensor4<T>&, int, Tensor4<T>&, Tensor4<T>&);

RBSR_INSTANTIATE(float)
RBSR_INSTANTIATE(double)

}  // namespace rbsr::nn
