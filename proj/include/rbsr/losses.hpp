#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rbsr/models.hpp"

namespace rbsr {

/// Weights of the pixel-wise, bicubic perceptual and adversarial terms.
struct LossWeights {
  double alpha = 1.0;
  double beta = 3.0;
  double gamma = 1.0;
};

template <class T>
struct LossValue {
  double value = 0.0;
  Tensor4<T> grad;  ///< d value / d pred
};

/// Mean absolute difference; subgradient sign(pred - target) / count.
template <class T>
LossValue<T> l1_loss(const Tensor4<T>& pred, const Tensor4<T>& target);

/// Mean squared difference.
template <class T>
LossValue<T> mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target);

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

struct AdversarialLosses {
  double loss_d = 0.0;  ///< -mean[log d_real + log(1 - d_fake)]
  double loss_g = 0.0;  ///< -mean[log d_fake], non-saturating
  std::vector<double> d_loss_d_real;  ///< d loss_d / d d_real
  std::vector<double> d_loss_d_fake;  ///< d loss_d / d d_fake
  std::vector<double> g_loss_d_fake;  ///< d loss_g / d d_fake
};

AdversarialLosses adversarial_losses(std::span<const double> d_real, std::span<const double> d_fake);

/// Frozen SR generator tapped at the output of residual block `tap_block`
/// (1-based). Held through a pointer to const so no optimizer can reach it.
template <class T>
class FeatureExtractor {
 public:
  FeatureExtractor(std::shared_ptr<const Model<T>> model, int tap_block);

  const Model<T>& model() const { return *model_; }
  int tap_block() const { return tap_block_; }
  int tap_layer() const { return model_->block_outputs[std::size_t(tap_block_ - 1)]; }

  Tensor4<T> features(const Tensor4<T>& x, ForwardTrace<T>* trace = nullptr) const;

 private:
  std::shared_ptr<const Model<T>> model_;
  int tap_block_;
};

/// Mean over all feature elements of (phi(pred) - phi(target))^2; the
/// gradient flows through the extractor into pred only.
template <class T>
LossValue<T> bicubic_perceptual_loss(const Tensor4<T>& pred, const Tensor4<T>& target,
                                     const FeatureExtractor<T>& fx);

double total_loss(double l_pix, double l_perc, double l_adv, const LossWeights& w);

}  // namespace rbsr
