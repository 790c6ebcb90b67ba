#include <cmath>
#include <stdexcept>

#include "rbsr/nn/parameter.hpp"

namespace rbsr::nn {

template <class T>
void adam_step(Parameter<T>& p, const AdamConfig& cfg) {
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
  require_same_shape(p.value.shape(), p.grad.shape(), "adam grad");
  ++p.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(p.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(p.step));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i];
    const double m = cfg.beta1 * double(p.m[i]) + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * double(p.v[i]) + (1.0 - cfg.beta2) * g * g;
    p.m[i] = T(m);
    p.v[i] = T(v);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    if (cfg.lr != 0.0)
      p.value[i] = T(double(p.value[i]) - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

template void adam_step<float>(Parameter<float>&, const AdamConfig&);
template void adam_step<double>(Parameter<double>&, const AdamConfig&);

}  // namespace rbsr::nn
