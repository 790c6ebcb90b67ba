#include "rbsr/selftest.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "rbsr/degrade.hpp"
#include "rbsr/gradcheck.hpp"
#include "rbsr/kernel_estim.hpp"
#include "rbsr/losses.hpp"
#include "rbsr/metrics.hpp"
#include "rbsr/resample.hpp"
#include "rbsr/synthetic.hpp"

namespace rbsr {

namespace {

struct Failure {
  std::string detail;
};

void expect(bool ok, const std::string& detail) {
  if (!ok)
    throw Failure{detail};
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

ImageTensor noise_image(int c, int h, int w, std::mt19937_64& rng) {
  ImageTensor img(c, h, w);
  for (auto& v : img.data) v = float(double(rng() >> 11) * 0x1.0p-53);
  return img;
}

void codec_group() {
  std::mt19937_64 rng(11);
  for (int c : {1, 3}) {
    RawImage img(7, 5, c);
    for (auto& v : img.data) v = std::uint8_t(rng());
    const auto bytes = encode_ppm(img);
    expect(decode_ppm(bytes) == img, "round trip differs");
    expect(to_raw(to_tensor(img)) == img, "tensor round trip differs");
    for (std::size_t n = 0; n < bytes.size(); ++n) {
      bool threw = false;
      try {
        decode_ppm(std::span(bytes.data(), n));
      } catch (const CodecError&) {
        threw = true;
      }
      expect(threw, "accepted a " + std::to_string(n) + "-byte prefix");
    }
  }
  std::vector<nn::NamedTensor> t = {{"a.w", {2, 3}, {1, 2, 3, 4, 5, 6}}, {"a.b", {2}, {0.5f, -0.25f}}};
  expect(nn::decode_checkpoint(nn::encode_checkpoint(t)) == t, "checkpoint round trip differs");
}

void resample_group() {
  for (auto [in, out] : {std::pair{32, 8}, std::pair{8, 32}, std::pair{17, 5}, std::pair{5, 17}}) {
    for (const auto& t : axis_taps(in, out, -0.5, true, Boundary::Reflect)) {
      double s = 0;
      for (double w : t.weight) s += w;
      expect(std::abs(s - 1.0) < 1e-6, "taps do not sum to one");
    }
  }
  ImageTensor flat(3, 20, 24, 0.37f);
  const auto down = downsample_bicubic_x4(flat);
  for (float v : down.data) expect(std::abs(v - 0.37f) < 1e-6, "constant not preserved");
  std::mt19937_64 rng(5);
  const auto img = noise_image(3, 12, 9, rng);
  const auto same = resize(img, ResampleSpec{1, 1});
  for (std::size_t i = 0; i < img.size(); ++i)
    expect(std::abs(same.data[i] - img.data[i]) < 1e-6, "scale-1 resize is not the identity");
}

void convolution_group() {
  std::mt19937_64 rng(3);
  const auto img = noise_image(2, 9, 11, rng);
  BlurKernel k(5, std::vector<double>(25));
  for (auto& t : k.taps) t = double(rng() % 1000) / 1000.0;
  const auto fast = convolve2d(img, k, Boundary::Reflect);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double s = 0;
        for (int u = 0; u < 5; ++u)
          for (int v = 0; v < 5; ++v)
            s += k.at(u, v) * img.at(c, boundary_index(y - (u - 2), img.height, Boundary::Reflect),
                                     boundary_index(x - (v - 2), img.width, Boundary::Reflect));
        expect(std::abs(s - fast.at(c, y, x)) <= 1e-6, "convolve2d disagrees with the direct sum");
      }

  nn::Tensor4<double> x(2, 3, 7, 6), w(4, 3, 3, 3);
  std::vector<double> b(4);
  for (auto& v : x.vec()) v = double(rng() % 2001) / 1000.0 - 1.0;
  for (auto& v : w.vec()) v = double(rng() % 2001) / 1000.0 - 1.0;
  for (auto& v : b) v = double(rng() % 2001) / 1000.0 - 1.0;
  for (int stride : {1, 2}) {
    const auto y = nn::conv2d<double>(x, w, b, stride, 1);
    for (int n = 0; n < y.n(); ++n)
      for (int o = 0; o < y.c(); ++o)
        for (int i = 0; i < y.h(); ++i)
          for (int j = 0; j < y.w(); ++j) {
            double s = b[std::size_t(o)];
            for (int c = 0; c < 3; ++c)
              for (int u = 0; u < 3; ++u)
                for (int v = 0; v < 3; ++v) {
                  const int yy = i * stride + u - 1, xx = j * stride + v - 1;
                  if (yy >= 0 && yy < x.h() && xx >= 0 && xx < x.w())
                    s += w.at(o, c, u, v) * x.at(n, c, yy, xx);
                }
            expect(std::abs(s - y.at(n, o, i, j)) <= 1e-9, "conv2d disagrees with the direct sum");
          }
  }
}

void gradient_group() {
  std::mt19937_64 rng(9);
  auto weighted_sum = [](std::uint64_t seed) {
    return [seed](const Tensor4<double>& y) {
      std::mt19937_64 r(seed);
      Tensor4<double> g(y.shape());
      double v = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        g[i] = double(r() % 2001) / 1000.0 - 1.0;
        v += g[i] * y[i];
      }
      return std::pair{v, g};
    };
  };
  auto input = [&](int n, int h, int w) {
    Tensor4<double> x(n, 3, h, w);
    for (auto& v : x.vec()) v = double(rng() % 1000) / 1000.0;
    return x;
  };
  auto gen = build_lookalike_generator<double>({1, 4}, 21);
  auto sr = build_sr_generator<double>({1, 4, 4}, 22);
  auto disc = build_discriminator<double>({4, 2, 8, 8}, 23);
  struct Case {
    const char* name;
    Model<double>* model;
    Tensor4<double> x;
  };
  Case cases[] = {{"lookalike", &gen, input(1, 6, 6)}, {"sr", &sr, input(1, 5, 5)}, {"disc", &disc, input(2, 8, 8)}};
  for (auto& c : cases) {
    const auto r = finite_diff_check(*c.model, weighted_sum(31), c.x, 1e-4, 60, 5);
    expect(r.max_rel_error < 1e-4, std::string(c.name) + " gradient error " + num(r.max_rel_error) + " at " + r.worst);
  }
}

void loss_group() {
  std::mt19937_64 rng(4);
  Tensor4<float> x(1, 3, 8, 8);
  for (auto& v : x.vec()) v = float(rng() % 1000) / 1000.0f;
  expect(l1_loss(x, x).value == 0.0, "L1(x, x) != 0");
  auto sr = std::make_shared<const Model<float>>(build_sr_generator<float>({2, 4, 4}, 8));
  FeatureExtractor<float> fx(sr, 2);
  const double before = sr->checksum();
  expect(bicubic_perceptual_loss(x, x, fx).value == 0.0, "perceptual(x, x) != 0");
  expect(sr->checksum() == before, "extractor weights changed");
  expect(std::abs(total_loss(0.1, 0.2, 0.3, {}) - 1.0) < 1e-12, "weighted total mismatch");
  const std::vector<double> half = {0.5, 0.5};
  const auto adv = adversarial_losses(half, half);
  expect(std::abs(adv.loss_d - 2 * std::log(2.0)) < 1e-9 && std::abs(adv.loss_g - std::log(2.0)) < 1e-9,
         "adversarial losses at d = 0.5");
}

void kernel_group() {
  const ImageTensor hr = synthetic_image(96, 96, 77);
  DegradationParams p;
  p.kernel = make_gaussian_kernel(1.5, 13);
  const ImageTensor lr = degrade(hr, p);
  EstimationConfig cfg;
  const auto est = estimate_kernel(hr, lr, cfg);
  double num2 = 0, den2 = 0;
  for (std::size_t i = 0; i < est.kernel.taps.size(); ++i) {
    num2 += (est.kernel.taps[i] - p.kernel.taps[i]) * (est.kernel.taps[i] - p.kernel.taps[i]);
    den2 += p.kernel.taps[i] * p.kernel.taps[i];
  }
  const double rel = std::sqrt(num2 / den2);
  expect(rel < 0.05, "kernel relative error " + num(rel));
}

void metrics_group() {
  ImageTensor a(3, 16, 16, 0.4f), b(3, 16, 16, 0.5f);
  for (std::size_t i = 0; i < b.size(); ++i) b.data[i] = a.data[i] + 0.1f;
  const double p = psnr(a, b);
  expect(std::abs(p - 20.0) < 1e-5, "psnr of a 0.1 offset is " + num(p));
  std::mt19937_64 rng(2);
  const auto x = noise_image(3, 20, 20, rng);
  expect(std::abs(ssim(x, x) - 1.0) < 1e-9, "ssim(x, x) != 1");
  expect(std::isinf(psnr(x, x)), "psnr(x, x) not infinite");
}

}  // namespace

int run_selftest(std::ostream& out) {
  const std::pair<const char*, std::function<void()>> groups[] = {
      {"codec", codec_group},       {"resample", resample_group}, {"convolution", convolution_group},
      {"gradients", gradient_group}, {"losses", loss_group},      {"kernel-estimation", kernel_group},
      {"metrics", metrics_group},
  };
  int failed = 0;
  for (const auto& [name, fn] : groups) {
    try {
      fn();
      out << "PASS " << name << "\n";
    } catch (const Failure& f) {
      ++failed;
      out << "FAIL " << name << ": " << f.detail << "\n";
    } catch (const std::exception& e) {
      ++failed;
      out << "FAIL " << name << ": exception: " << e.what() << "\n";
    }
    out.flush();
  }
  return failed;
}

}  // namespace rbsr
