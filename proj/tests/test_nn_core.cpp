#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "rbsr/gradcheck.hpp"
#include "rbsr/nn/checkpoint.hpp"
#include "rbsr/nn/layers.hpp"
#include "rbsr/nn/parameter.hpp"

using namespace rbsr;
using nn::Tensor4;

namespace {

Tensor4<double> random_tensor(int n, int c, int h, int w, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  Tensor4<double> t(n, c, h, w);
  for (auto& v : t.vec()) v = lo + (hi - lo) * oracle::uniform01(rng);
  return t;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2 * oracle::uniform01(rng) - 1;
  return v;
}

/// Scalar sum(G * f(x)) for a fixed random G, with gradient G propagated.
struct Probe {
  Tensor4<double> g;
  double dot(const Tensor4<double>& y) const {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += g[i] * y[i];
    return s;
  }
};

}  // namespace

TEST_CASE("conv2d trivial cases") {
  std::mt19937_64 rng(1);
  const auto x = random_tensor(2, 3, 5, 4, rng);
  Tensor4<double> w(3, 3, 1, 1);
  for (int c = 0; c < 3; ++c) w.at(c, c, 0, 0) = 1;
  CHECK(nn::conv2d<double>(x, w, {}, 1, 0) == x);

  const std::vector<double> b = {0.5, -1, 2};
  const auto y = nn::conv2d<double>(Tensor4<double>(1, 3, 4, 4), random_tensor(3, 3, 3, 3, rng), b, 1, 1);
  for (int o = 0; o < 3; ++o)
    for (int i = 0; i < 16; ++i) CHECK(y.plane(0, o)[i] == b[std::size_t(o)]);
  CHECK_THROWS(nn::conv2d<double>(x, random_tensor(2, 2, 3, 3, rng), {}, 1, 1));
}

TEST_CASE("conv2d matches the brute-force oracle") {
  std::mt19937_64 rng(2);
  const auto x = random_tensor(1, 2, 5, 5, rng);
  const auto w = random_tensor(3, 2, 3, 3, rng);
  const auto b = random_vec(3, rng);
  for (int stride : {1, 2})
    for (int pad : {0, 1}) {
      const auto got = nn::conv2d<double>(x, w, b, stride, pad), want = oracle::conv2d(x, w, b, stride, pad);
      REQUIRE(got.shape() == want.shape());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
    }
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 3 + int(rng() % 6), wd = 3 + int(rng() % 6);
    const auto xx = random_tensor(1 + int(rng() % 2), 1 + int(rng() % 3), h, wd, rng);
    const auto ww = random_tensor(1 + int(rng() % 3), xx.c(), 3, 3, rng);
    const auto bb = random_vec(std::size_t(ww.n()), rng);
    const auto got = nn::conv2d<float>(xx.cast<float>(), ww.cast<float>(), std::vector<float>(bb.begin(), bb.end()), 1, 1);
    const auto want = oracle::conv2d(xx, ww, bb, 1, 1);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-5);
  }
}

TEST_CASE("conv2d_grad") {
  std::mt19937_64 rng(3);
  const auto x = random_tensor(2, 3, 6, 5, rng);
  const auto w = random_tensor(4, 3, 3, 3, rng);
  const auto zero = nn::conv2d_grad<double>(x, w, Tensor4<double>(2, 4, 6, 5), 1, 1);
  for (double v : zero.dx.vec()) CHECK(v == 0);
  for (double v : zero.dw.vec()) CHECK(v == 0);
  for (double v : zero.db) CHECK(v == 0);

  Tensor4<double> id(3, 3, 1, 1);
  for (int c = 0; c < 3; ++c) id.at(c, c, 0, 0) = 1;
  const auto dy = random_tensor(2, 3, 6, 5, rng);
  CHECK(nn::conv2d_grad<double>(x, id, dy, 1, 0).dx == dy);

  for (int stride : {1, 2}) {
    const auto y0 = nn::conv2d<double>(x, w, std::vector<double>(4, 0.1), stride, 1);
    const Probe p{random_tensor(y0.n(), y0.c(), y0.h(), y0.w(), rng)};
    const auto g = nn::conv2d_grad<double>(x, w, p.g, stride, 1);
    std::vector<double> b(4, 0.1);
    auto fx = [&](const Tensor4<double>& v) { return std::pair{p.dot(nn::conv2d<double>(v, w, b, stride, 1)), g.dx}; };
    auto fw = [&](const Tensor4<double>& v) { return std::pair{p.dot(nn::conv2d<double>(x, v, b, stride, 1)), g.dw}; };
    CHECK(finite_diff_check(fx, x, 1e-4, 200, 5).max_rel_error < 1e-4);
    CHECK(finite_diff_check(fw, w, 1e-4, 200, 6).max_rel_error < 1e-4);
    Tensor4<double> bt(4, 1, 1, 1, 0.1);
    Tensor4<double> db(4, 1, 1, 1);
    for (int o = 0; o < 4; ++o) db[std::size_t(o)] = g.db[std::size_t(o)];
    auto fb = [&](const Tensor4<double>& v) {
      return std::pair{p.dot(nn::conv2d<double>(x, w, std::vector<double>(v.vec()), stride, 1)), db};
    };
    CHECK(finite_diff_check(fb, bt, 1e-4, 4, 7).max_rel_error < 1e-4);
  }
}

TEST_CASE("activations") {
  Tensor4<double> x(1, 1, 1, 3);
  x.vec() = {-1, 0, 2};
  CHECK(nn::activation(x, nn::Activation::Relu).vec() == std::vector<double>{0, 0, 2});
  Tensor4<double> z(1, 1, 1, 1);
  CHECK(nn::activation(z, nn::Activation::Sigmoid)[0] == 0.5);
  Tensor4<double> one(1, 1, 1, 1, 1.0);
  CHECK(nn::activation_grad(z, one, nn::Activation::Sigmoid)[0] == doctest::Approx(0.25).epsilon(1e-15));

  std::mt19937_64 rng(4);
  const auto xs = random_tensor(2, 8, 9, 9, rng);
  const Probe p{random_tensor(2, 8, 9, 9, rng)};
  for (auto kind : {nn::Activation::Relu, nn::Activation::Sigmoid}) {
    const auto g = nn::activation_grad(xs, p.g, kind);
    auto f = [&](const Tensor4<double>& v) { return std::pair{p.dot(nn::activation(v, kind)), g}; };
    KinkProbe signs = [](const Tensor4<double>& v) {
      std::vector<bool> s;
      for (double e : v.vec()) s.push_back(e > 0);
      return s;
    };
    CHECK(finite_diff_check(f, xs, 1e-4, 300, 8, signs).max_rel_error < 1e-4);
  }
}

TEST_CASE("dense") {
  std::mt19937_64 rng(5);
  Tensor4<double> eye(4, 4, 1, 1);
  for (int i = 0; i < 4; ++i) eye.at(i, i, 0, 0) = 1;
  const auto x = random_tensor(3, 4, 1, 1, rng);
  CHECK(nn::dense<double>(x, eye, std::vector<double>(4, 0.0)) == x);
  const std::vector<double> b = {1, 2};
  const auto y = nn::dense<double>(Tensor4<double>(2, 8, 1, 1), random_tensor(2, 8, 1, 1, rng), b);
  CHECK(y.vec() == std::vector<double>{1, 2, 1, 2});

  const auto xs = random_tensor(4, 2, 2, 2, rng);
  const auto w = random_tensor(3, 8, 1, 1, rng);
  const auto bias = random_vec(3, rng);
  const Probe p{random_tensor(4, 3, 1, 1, rng)};
  const auto g = nn::dense_grad<double>(xs, w, p.g);
  auto fx = [&](const Tensor4<double>& v) { return std::pair{p.dot(nn::dense<double>(v, w, bias)), g.dx}; };
  auto fw = [&](const Tensor4<double>& v) { return std::pair{p.dot(nn::dense<double>(xs, v, bias)), g.dw}; };
  CHECK(finite_diff_check(fx, xs, 1e-4, 32, 9).max_rel_error < 1e-4);
  CHECK(finite_diff_check(fw, w, 1e-4, 24, 10).max_rel_error < 1e-4);
  CHECK_THROWS(nn::dense<double>(random_tensor(1, 5, 1, 1, rng), w, bias));
}

TEST_CASE("pixel shuffle") {
  std::mt19937_64 rng(6);
  const auto x = random_tensor(2, 8, 3, 4, rng);
  CHECK(nn::pixel_shuffle(x, 1) == x);
  Tensor4<double> small(1, 4, 2, 2);
  for (std::size_t i = 0; i < small.size(); ++i) small[i] = double(i);
  const auto y = nn::pixel_shuffle(small, 2);
  REQUIRE(y.shape() == nn::Shape4{1, 1, 4, 4});
  for (int h = 0; h < 2; ++h)
    for (int w = 0; w < 2; ++w)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) CHECK(y.at(0, 0, h * 2 + dy, w * 2 + dx) == small.at(0, dy * 2 + dx, h, w));
  CHECK(nn::pixel_unshuffle(nn::pixel_shuffle(x, 2), 2) == x);
  CHECK_THROWS(nn::pixel_shuffle(random_tensor(1, 6, 2, 2, rng), 2));
}

TEST_CASE("adam") {
  nn::Parameter<double> p("p", 1, Tensor4<double>(1, 1, 1, 1, 0.5));
  nn::adam_step(p, {1e-4});
  CHECK(p.value[0] == 0.5);
  CHECK(p.step == 1);

  nn::Parameter<double> q("q", 1, Tensor4<double>(1, 1, 1, 1, 0.0));
  q.grad[0] = 1;
  nn::adam_step(q, {1e-4});
  CHECK(q.value[0] == doctest::Approx(-1e-4 / (1 + 1e-8)).epsilon(1e-12));

  // two steps of constant g = 1 against the recurrence
  nn::Parameter<double> r("r", 1, Tensor4<double>(1, 1, 1, 1, 0.0));
  double m = 0, v = 0, value = 0;
  for (int t = 1; t <= 2; ++t) {
    r.grad[0] = 1;
    nn::adam_step(r, {1e-3});
    m = 0.9 * m + 0.1;
    v = 0.999 * v + 0.001;
    value -= 1e-3 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  CHECK(r.value[0] == doctest::Approx(value).epsilon(1e-12));

  nn::Parameter<double> s("s", 1, Tensor4<double>(1, 1, 1, 1, 0.25));
  s.grad[0] = 3;
  nn::adam_step(s, {0.0});
  CHECK(s.value[0] == 0.25);
  CHECK(s.step == 1);
  CHECK(s.m[0] != 0);
}

TEST_CASE("checkpoint format") {
  const std::vector<nn::NamedTensor> one = {{"w", {2, 2}, {1.5f, -2, 0.25f, 8}}};
  CHECK(nn::decode_checkpoint(nn::encode_checkpoint(one)) == one);
  const auto empty = nn::encode_checkpoint({});
  CHECK(empty.size() == 10);
  CHECK(std::memcmp(empty.data(), "RBSRW1", 6) == 0);

  auto bad = nn::encode_checkpoint(one);
  std::memcpy(bad.data(), "XXXX", 4);
  try {
    nn::decode_checkpoint(bad);
    FAIL("bad magic accepted");
  } catch (const nn::CheckpointError& e) {
    CHECK(e.kind() == nn::CheckpointError::Kind::BadMagic);
  }
  const auto good = nn::encode_checkpoint(one);
  for (std::size_t n = 0; n < good.size(); ++n)
    CHECK_THROWS_AS(nn::decode_checkpoint(std::span(good.data(), n)), nn::CheckpointError);
  const std::vector<nn::NamedTensor> dup = {{"a", {1}, {1}}, {"a", {1}, {2}}};
  CHECK_THROWS_AS(nn::encode_checkpoint(dup), nn::CheckpointError);

  const auto path = std::filesystem::temp_directory_path() / "rbsr_nn_test.ckpt";
  std::mt19937_64 rng(7);
  std::vector<nn::NamedTensor> many;
  for (int t = 0; t < 5; ++t) {
    nn::NamedTensor nt{"t" + std::to_string(t), {3, 1, 2}, {}};
    for (int i = 0; i < 6; ++i) nt.data.push_back(float(oracle::uniform01(rng) * 1e6 - 5e5));
    many.push_back(nt);
  }
  nn::checkpoint_write(path, many);
  CHECK(nn::checkpoint_read(path) == many);
  std::filesystem::remove(path);
}

TEST_CASE("finite difference oracle on a linear model") {
  std::mt19937_64 rng(8);
  const auto w = random_tensor(2, 3, 1, 1, rng);
  const auto x = random_tensor(1, 3, 4, 4, rng);
  const Probe p{random_tensor(1, 2, 4, 4, rng)};
  Tensor4<double> gw(2, 3, 1, 1);
  for (int o = 0; o < 2; ++o)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 16; ++i) gw.at(o, c, 0, 0) += p.g.plane(0, o)[i] * x.plane(0, c)[i];
  auto f = [&](const Tensor4<double>& v) { return std::pair{p.dot(nn::conv2d<double>(x, v, {}, 1, 0)), gw}; };
  CHECK(finite_diff_check(f, w, 1e-4, 6, 1).max_rel_error < 1e-8);
}
