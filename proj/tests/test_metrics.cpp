#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "rbsr/metrics.hpp"

using namespace rbsr;
namespace fs = std::filesystem;

namespace {

ImageTensor with_noise(const ImageTensor& x, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  ImageTensor y = x;
  for (auto& v : y.data) v = float(std::clamp(v + n(rng), 0.0, 1.0));
  return y;
}

}  // namespace

TEST_CASE("PSNR") {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_image(3, 16, 16, rng);
  ImageTensor a(3, 16, 16, 0.4f), b(3, 16, 16, 0.5f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(psnr(a, b, 255.0) == doctest::Approx(20.0 + 20 * std::log10(255.0)).epsilon(1e-5));
  CHECK(std::isinf(psnr(x, x)));
  CHECK(psnr(x, x) > 0);
  CHECK(format_metric(psnr(x, x)) == "inf");
  CHECK(mse(a, b) == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(mean_abs_diff(a, b) == doctest::Approx(0.1).epsilon(1e-5));
  CHECK_THROWS(psnr(a, ImageTensor(3, 16, 15)));

  const auto ref = oracle::random_image(3, 32, 32, rng);
  double last = INFINITY;
  for (double sigma : {0.01, 0.03, 0.1, 0.3}) {
    const double p = psnr(with_noise(ref, sigma, rng), ref);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("SSIM basics") {
  std::mt19937_64 rng(2);
  const auto x = oracle::random_image(3, 24, 24, rng);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-9));
  ImageTensor inv = x;
  for (auto& v : inv.data) v = 1.0f - v;
  CHECK(ssim(x, inv) < 0.2);

  ImageTensor a(1, 16, 16, 0.4f), b(1, 16, 16, 0.5f);
  const double c1 = 1e-4;
  CHECK(ssim(a, b) == doctest::Approx((2 * 0.4 * 0.5 + c1) / (0.16 + 0.25 + c1)).epsilon(1e-6));
  CHECK_THROWS(ssim(ImageTensor(1, 10, 10), ImageTensor(1, 10, 10)));

  const auto g = gaussian_window_1d(11, 1.5);
  double s = 0;
  for (double v : g) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g[5] > g[4]);
  CHECK(g[0] == doctest::Approx(g[10]).epsilon(1e-15));
}

TEST_CASE("SSIM agrees with the direct definition") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const int h = 11 + int(rng() % 14), w = 11 + int(rng() % 14);
    const auto a = oracle::random_image(3, h, w, rng);
    const auto b = with_noise(a, 0.05 + 0.05 * t, rng);
    const double s = ssim(a, b);
    CHECK(std::abs(s - oracle::ssim(a, b)) < 1e-6);
    CHECK(std::abs(s - ssim(b, a)) < 1e-12);
    CHECK(s <= 1.0);
    CHECK(s >= -1.0);
  }
}

TEST_CASE("pair evaluation and CSV") {
  CHECK(metrics_csv({}) == "name,psnr,ssim,error\n");

  const fs::path dir = fs::temp_directory_path() / "rbsr_metrics";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(4);
  const auto ref = oracle::random_image(3, 20, 20, rng);
  save_image(dir / "ref.ppm", ref);
  save_image(dir / "same.ppm", ref);
  save_image(dir / "noisy.ppm", with_noise(ref, 0.05, rng));
  save_image(dir / "small.ppm", ImageTensor(3, 12, 12));
  {
    std::ofstream list(dir / "pairs.txt");
    list << "# out\tref\nsame.ppm\tref.ppm\nnoisy.ppm\tref.ppm\nsmall.ppm\tref.ppm\nmissing.ppm\tref.ppm\n";
  }
  const auto pairs = read_pair_list(dir / "pairs.txt");
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].first == dir / "same.ppm");
  const auto rows = evaluate_pairs(pairs, 1.0, {});
  CHECK(std::isinf(rows[0].psnr));
  CHECK(rows[0].ssim == doctest::Approx(1.0));
  CHECK(rows[1].error.empty());
  CHECK(rows[1].psnr < 40);
  CHECK(!rows[2].error.empty());
  CHECK(!rows[3].error.empty());

  const auto csv = metrics_csv(rows);
  CHECK(csv.find("same.ppm,inf,1") != std::string::npos);
  CHECK(csv.find("\nmean,inf,") != std::string::npos);
  CHECK(csv.find("small.ppm,,,") != std::string::npos);

  const std::vector<PairMetrics> bad = {{"x", 0, 0, "broken"}};
  CHECK(metrics_csv(bad) == "name,psnr,ssim,error\nx,,,broken\nmean,nan,nan,\n");
  const std::vector<PairMetrics> two = {{"a", 30, 0.5, ""}, {"b", 20, 0.7, ""}};
  CHECK(metrics_csv(two).find("mean,25,0.6") != std::string::npos);

  {
    std::ofstream list(dir / "broken.txt");
    list << "no tab here\n";
  }
  CHECK_THROWS(read_pair_list(dir / "broken.txt"));
}
