#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "rbsr/gradcheck.hpp"
#include "rbsr/losses.hpp"

using namespace rbsr;

namespace {

Tensor4<double> random_tensor(int n, int c, int h, int w, std::mt19937_64& rng) {
  Tensor4<double> t(n, c, h, w);
  for (auto& v : t.vec()) v = oracle::uniform01(rng);
  return t;
}

}  // namespace

TEST_CASE("L1 values") {
  std::mt19937_64 rng(1);
  const auto x = random_tensor(2, 3, 4, 4, rng);
  CHECK(l1_loss(x, x).value == 0.0);
  auto y = x;
  for (auto& v : y.vec()) v += 0.5;
  CHECK(l1_loss(y, x).value == doctest::Approx(0.5).epsilon(1e-12));
  Tensor4<double> a(1, 1, 1, 2), b(1, 1, 1, 2);
  a.vec() = {0, 1};
  b.vec() = {1, 0};
  CHECK(l1_loss(a, b).value == 1.0);
  CHECK(l1_loss(a, a).grad.vec() == std::vector<double>{0, 0});
  CHECK_THROWS(l1_loss(a, Tensor4<double>(1, 1, 2, 1)));
}

TEST_CASE("L1 gradient") {
  std::mt19937_64 rng(2);
  const auto pred = random_tensor(2, 3, 5, 5, rng), target = random_tensor(2, 3, 5, 5, rng);
  auto f = [&](const Tensor4<double>& p) {
    auto l = l1_loss(p, target);
    return std::pair{l.value, l.grad};
  };
  KinkProbe side = [&](const Tensor4<double>& p) {
    std::vector<bool> s;
    for (std::size_t i = 0; i < p.size(); ++i) s.push_back(p[i] > target[i]);
    return s;
  };
  CHECK(finite_diff_check(f, pred, 1e-4, 150, 3, side).max_rel_error < 1e-4);
}

TEST_CASE("adversarial losses") {
  const std::vector<double> half = {0.5, 0.5, 0.5};
  const auto a = adversarial_losses(half, half);
  CHECK(a.loss_d == doctest::Approx(2 * std::log(2.0)).epsilon(1e-12));
  CHECK(a.loss_g == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(a.loss_d - 1.3863) < 1e-4);

  const std::vector<double> one = {1.0}, zero = {0.0};
  const auto perfect = adversarial_losses(one, zero);
  CHECK(perfect.loss_d < 1e-6);
  CHECK(std::isfinite(adversarial_losses(zero, one).loss_d));
  CHECK(adversarial_losses(one, one).loss_g < 1e-6);

  std::mt19937_64 rng(4);
  Tensor4<double> d(6, 1, 1, 1);
  for (auto& v : d.vec()) v = 0.05 + 0.9 * oracle::uniform01(rng);
  auto split = [](const Tensor4<double>& t) {
    return std::pair{std::vector<double>(t.vec().begin(), t.vec().begin() + 3),
                     std::vector<double>(t.vec().begin() + 3, t.vec().end())};
  };
  auto fd = [&](const Tensor4<double>& t) {
    const auto [r, f] = split(t);
    const auto l = adversarial_losses(r, f);
    Tensor4<double> g(t.shape());
    for (int i = 0; i < 3; ++i) {
      g[std::size_t(i)] = l.d_loss_d_real[std::size_t(i)];
      g[std::size_t(i + 3)] = l.d_loss_d_fake[std::size_t(i)];
    }
    return std::pair{l.loss_d, g};
  };
  auto fg = [&](const Tensor4<double>& t) {
    const auto [r, f] = split(t);
    const auto l = adversarial_losses(r, f);
    Tensor4<double> g(t.shape());
    for (int i = 0; i < 3; ++i) g[std::size_t(i + 3)] = l.g_loss_d_fake[std::size_t(i)];
    return std::pair{l.loss_g, g};
  };
  CHECK(finite_diff_check(fd, d, 1e-6, 6, 1).max_rel_error < 1e-4);
  CHECK(finite_diff_check(fg, d, 1e-6, 6, 2).max_rel_error < 1e-4);
}

TEST_CASE("perceptual loss") {
  std::mt19937_64 rng(5);
  auto sr = std::make_shared<const Model<double>>(build_sr_generator<double>({2, 4, 4}, 6));
  const FeatureExtractor<double> fx(sr, 2);
  const double before = sr->checksum();
  const auto x = random_tensor(2, 3, 8, 8, rng), y = random_tensor(2, 3, 8, 8, rng);
  CHECK(bicubic_perceptual_loss(x, x, fx).value == 0.0);
  CHECK(bicubic_perceptual_loss(x, y, fx).value >= 0.0);

  auto f = [&](const Tensor4<double>& p) {
    auto l = bicubic_perceptual_loss(p, y, fx);
    return std::pair{l.value, l.grad};
  };
  KinkProbe kinks = [&](const Tensor4<double>& p) { return relu_signature(*sr, p, fx.tap_layer()); };
  const auto r = finite_diff_check(f, x, 1e-4, 200, 7, kinks);
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(sr->checksum() == before);
  CHECK_THROWS(FeatureExtractor<double>(sr, 3));
}

TEST_CASE("identity extractor collapses to MSE") {
  std::mt19937_64 rng(8);
  auto model = build_sr_generator<double>({1, 3, 4});
  for (auto& p : model.params) p.value.fill(0);
  for (int c = 0; c < 3; ++c) model.find("sr.head.w")->value.at(c, c, 1, 1) = 1;
  const FeatureExtractor<double> fx(std::make_shared<const Model<double>>(std::move(model)), 1);
  const auto x = random_tensor(1, 3, 7, 7, rng), y = random_tensor(1, 3, 7, 7, rng);
  CHECK(bicubic_perceptual_loss(x, y, fx).value == doctest::Approx(mse_loss(x, y).value).epsilon(1e-6));
}

TEST_CASE("total loss") {
  CHECK(total_loss(0.1, 0.2, 0.3, {}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(total_loss(0.7, 5, 9, {1, 0, 0}) == 0.7);
  CHECK(total_loss(0, 0, 0, {}) == 0.0);
  const LossWeights w{0.5, 2, 4};
  CHECK(total_loss(1, 1, 1, w) == doctest::Approx(total_loss(1, 0, 0, w) + total_loss(0, 1, 0, w) + total_loss(0, 0, 1, w)));
  CHECK(total_loss(2, 0, 0, w) == 2 * total_loss(1, 0, 0, w));
}
