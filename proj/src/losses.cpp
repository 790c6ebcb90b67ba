#include "rbsr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rbsr {

template <class T>
LossValue<T> l1_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
  nn::require_same_shape(pred.shape(), target.shape(), "l1_loss");
  LossValue<T> out{0.0, Tensor4<T>(pred.shape())};
  const double inv = 1.0 / double(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = double(pred[i]) - double(target[i]);
    sum += std::abs(d);
    out.grad[i] = d > 0 ? T(inv) : (d < 0 ? T(-inv) : T(0));
  }
  out.value = sum * inv;
  return out;
}

template <class T>
LossValue<T> mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
  nn::require_same_shape(pred.shape(), target.shape(), "mse_loss");
  LossValue<T> out{0.0, Tensor4<T>(pred.shape())};
  const double inv = 1.0 / double(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = double(pred[i]) - double(target[i]);
    sum += d * d;
    out.grad[i] = T(2.0 * d * inv);
  }
  out.value = sum * inv;
  return out;
}

namespace {

struct ClampedLog {
  double value;
  double slope;  // d log(clamp(p)) / dp, zero where the clamp is active
};

ClampedLog clamped_log(double p) {
  const double lo = kProbClamp, hi = 1.0 - kProbClamp;
  if (p < lo)
    return {std::log(lo), 0.0};
  if (p > hi)
    return {std::log(hi), 0.0};
  return {std::log(p), 1.0 / p};
}

}  // namespace

AdversarialLosses adversarial_losses(std::span<const double> d_real, std::span<const double> d_fake) {
  AdversarialLosses out;
  out.d_loss_d_real.resize(d_real.size());
  out.d_loss_d_fake.resize(d_fake.size());
  out.g_loss_d_fake.resize(d_fake.size());
  if (!d_real.empty()) {
    const double inv = 1.0 / double(d_real.size());
    for (std::size_t i = 0; i < d_real.size(); ++i) {
      const auto l = clamped_log(d_real[i]);
      out.loss_d -= l.value * inv;
      out.d_loss_d_real[i] = -l.slope * inv;
    }
  }
  if (!d_fake.empty()) {
    const double inv = 1.0 / double(d_fake.size());
    for (std::size_t i = 0; i < d_fake.size(); ++i) {
      const auto not_fake = clamped_log(1.0 - d_fake[i]);
      out.loss_d -= not_fake.value * inv;
      out.d_loss_d_fake[i] = not_fake.slope * inv;  // chain rule through (1 - d)
      const auto fake = clamped_log(d_fake[i]);
      out.loss_g -= fake.value * inv;
      out.g_loss_d_fake[i] = -fake.slope * inv;
    }
  }
  return out;
}

template <class T>
FeatureExtractor<T>::FeatureExtractor(std::shared_ptr<const Model<T>> model, int tap_block)
    : model_(std::move(model)), tap_block_(tap_block) {
  if (!model_)
    throw std::invalid_argument("FeatureExtractor: null model");
  if (tap_block_ < 1 || tap_block_ > model_->residual_blocks())
    throw std::invalid_argument("FeatureExtractor: tap block " + std::to_string(tap_block_) + " outside 1.." +
                                std::to_string(model_->residual_blocks()));
}

template <class T>
Tensor4<T> FeatureExtractor<T>::features(const Tensor4<T>& x, ForwardTrace<T>* trace) const {
  return model_->forward(x, trace, tap_layer());
}

template <class T>
LossValue<T> bicubic_perceptual_loss(const Tensor4<T>& pred, const Tensor4<T>& target,
                                     const FeatureExtractor<T>& fx) {
  nn::require_same_shape(pred.shape(), target.shape(), "bicubic_perceptual_loss");
  ForwardTrace<T> trace;
  const Tensor4<T> fp = fx.features(pred, &trace);
  const Tensor4<T> ft = fx.features(target);
  const LossValue<T> feat = mse_loss(fp, ft);
  return {feat.value, fx.model().input_gradient(trace, feat.grad)};
}

double total_loss(double l_pix, double l_perc, double l_adv, const LossWeights& w) {
  return w.alpha * l_pix + w.beta * l_perc + w.gamma * l_adv;
}

#define RBSR_INSTANTIATE(T)                                                                        \
  template LossValue<T> l1_loss<T>(const Tensor4<T>&, const Tensor4<T>&);                          \
  template LossValue<T> mse_loss<T>(const Tensor4<T>&, const Tensor4<T>&);                         \
  template class FeatureExtractor<T>;                                                              \
  template LossValue<T> bicubic_perceptual_loss<T>(const Tensor4<T>&, const Tensor4<T>&,           \
                                                   const FeatureExtractor<T>&);

RBSR_INSTANTIATE(float)
RBSR_INSTANTIATE(double)

}  // namespace rbsr
