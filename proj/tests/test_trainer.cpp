#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rbsr/degrade.hpp"
#include "rbsr/nn/checkpoint.hpp"
#include "rbsr/resample.hpp"
#include "rbsr/synthetic.hpp"
#include "rbsr/trainer.hpp"

using namespace rbsr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rbsr_trainer_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ImageTensor blurred(const ImageTensor& x, double sigma) {
  return convolve2d(x, make_gaussian_kernel(sigma, 9), Boundary::Reflect);
}

/// Uniform-noise inputs against contrast-reduced targets (v -> 0.6 v + 0.2),
/// plus identity entries whose values sit near that map's fixed point 0.5.
/// Every crop has the same statistics, so epoch losses carry little sampling
/// noise and the two kinds do not pull the generator apart.
Dataset lookalike_data(int n, int size, int identities) {
  Dataset d;
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 g(std::uint64_t(900 + i));
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    ImageTensor in(3, size, size);
    for (auto& v : in.data) v = u(g);
    ImageTensor target = in;
    for (auto& v : target.data) v = 0.6f * v + 0.2f;
    d.pairs.push_back({"p" + std::to_string(i), in, target, PairKind::SyntheticPair});
  }
  for (int i = 0; i < identities; ++i) {
    std::mt19937_64 g(std::uint64_t(950 + i));
    std::uniform_real_distribution<float> u(0.45f, 0.55f);
    ImageTensor img(3, size, size);
    for (auto& v : img.data) v = u(g);
    d.pairs.push_back({"i" + std::to_string(i), img, img, PairKind::IdentityBicubic});
  }
  return d;
}

Dataset upscale_data(int n, int lr) {
  Dataset d;
  d.target_scale = 4;
  for (int i = 0; i < n; ++i) {
    const auto hr = synthetic_image(4 * lr, 4 * lr, std::uint64_t(700 + i));
    d.pairs.push_back({"u" + std::to_string(i), downsample_bicubic_x4(hr), hr, PairKind::RealPair});
  }
  return d;
}

}  // namespace

TEST_CASE("manifest text") {
  const std::string text =
      "# comment\n\nreal_pair\ta.ppm\tb.ppm\nsynthetic_pair\t/abs/c.ppm\td.ppm\nidentity_bicubic\te.ppm\te.ppm\n";
  const auto m = parse_manifest(text, "/data");
  REQUIRE(m.size() == 3);
  CHECK(m[0].kind == PairKind::RealPair);
  CHECK(m[0].input_path == fs::path("/data/a.ppm"));
  CHECK(m[1].input_path == fs::path("/abs/c.ppm"));
  CHECK(m[2].kind == PairKind::IdentityBicubic);
  const auto again = parse_manifest(format_manifest(m));
  REQUIRE(again.size() == m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(again[i].kind == m[i].kind);
    CHECK(again[i].input_path == m[i].input_path);
    CHECK(again[i].target_path == m[i].target_path);
  }
  CHECK_THROWS(parse_manifest("real_pair a.ppm b.ppm\n"));
  CHECK_THROWS(parse_manifest("mystery\ta\tb\n"));
  CHECK_THROWS_AS(parse_pair_kind("real"), std::invalid_argument);
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.pairs.push_back({"a", ImageTensor(3, 8, 8), ImageTensor(3, 32, 32), PairKind::RealPair});
  d.target_scale = 4;
  CHECK_NOTHROW(validate_dataset(d));
  d.pairs.push_back({"b", ImageTensor(3, 8, 8), ImageTensor(3, 31, 32), PairKind::RealPair});
  try {
    validate_dataset(d);
    FAIL("mismatch accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("b:") == 0);
  }
  Dataset id;
  id.target_scale = 4;
  id.pairs.push_back({"c", ImageTensor(3, 8, 8), ImageTensor(3, 32, 32), PairKind::IdentityBicubic});
  CHECK_THROWS(validate_dataset(id));

  const auto dir = scratch_dir("dataset");
  save_image(dir / "a.ppm", ImageTensor(3, 8, 8, 0.5f));
  save_image(dir / "b.ppm", ImageTensor(3, 32, 32, 0.5f));
  const Manifest m = {{dir / "a.ppm", dir / "b.ppm", PairKind::RealPair}};
  CHECK(load_dataset(m, 4).pairs.size() == 1);
  CHECK_THROWS(load_dataset(m, 2));
}

TEST_CASE("learning-rate schedules") {
  const auto g = lookalike_schedule();
  CHECK(lr_at_epoch(0, g) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at_epoch(799, g) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at_epoch(800, g) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(lr_at_epoch(1600, g) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(g.phase1_epochs == 1000);
  CHECK(g.phase2_epochs == 3000);
  const auto s = sr_schedule();
  CHECK(lr_at_epoch(0, s) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(lr_at_epoch(999, s) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(lr_at_epoch(1000, s) == doctest::Approx(1e-4).epsilon(1e-12));
  for (const auto& sched : {g, s, e2e_schedule()})
    for (int e = 1; e < 4000; ++e) CHECK(lr_at_epoch(e, sched) <= lr_at_epoch(e - 1, sched));
  CHECK_THROWS(lr_at_epoch(-1, g));
  CHECK(iterations_per_epoch(20, 4) == 5);
  CHECK(iterations_per_epoch(21, 4) == 6);
  CHECK(iterations_per_epoch(1, 16) == 1);
}

TEST_CASE("batch sampling") {
  Dataset d;
  std::mt19937_64 rng(3);
  const PairKind kinds[] = {PairKind::RealPair, PairKind::SyntheticPair, PairKind::IdentityBicubic};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 400; ++i) {
      auto in = oracle::random_image(3, 10, 10, rng);
      auto target = kinds[k] == PairKind::IdentityBicubic ? in : oracle::random_image(3, 10, 10, rng);
      d.pairs.push_back({"x", std::move(in), std::move(target), kinds[k]});
    }
  std::mt19937_64 draw(9);
  int identity = 0, total = 0;
  while (total < 30000) {
    const Batch b = sample_batch(d, 6, 10, draw);
    CHECK(b.inputs.shape() == Shape4{10, 3, 6, 6});
    for (int i = 0; i < 10; ++i) {
      ++total;
      if (b.kinds[std::size_t(i)] != PairKind::IdentityBicubic)
        continue;
      ++identity;
      for (int c = 0; c < 3; ++c)
        for (int p = 0; p < 36; ++p) CHECK(b.inputs.plane(i, c)[p] == b.targets.plane(i, c)[p]);
    }
  }
  CHECK(std::abs(double(identity) / total - 1.0 / 3.0) < 0.02);

  std::mt19937_64 r1(5), r2(5);
  const Batch a = sample_batch(d, 6, 4, r1), b = sample_batch(d, 6, 4, r2);
  CHECK(a.inputs == b.inputs);
  CHECK(a.entries == b.entries);
  CHECK_THROWS(sample_batch(d, 11, 4, r1));
}

TEST_CASE("scaled crops stay aligned") {
  Dataset d = upscale_data(2, 12);
  std::mt19937_64 rng(4);
  const Batch b = sample_batch(d, 8, 3, rng);
  CHECK(b.targets.shape() == Shape4{3, 3, 32, 32});
  // a flat-colour pair keeps its colour in both crops
  Dataset flat;
  flat.target_scale = 4;
  flat.pairs.push_back({"f", ImageTensor(3, 9, 9, 0.25f), ImageTensor(3, 36, 36, 0.25f), PairKind::RealPair});
  const Batch f = sample_batch(flat, 5, 2, rng);
  for (float v : f.targets.vec()) CHECK(v == 0.25f);
}

TEST_CASE("training log format") {
  TrainLogRow r{3, 1e-4, 0.25, 0.5, 0.75, 1.5, 2.25, 0};
  const std::string text = "# header comment\n" + std::string(kTrainLogHeader) + "\n" + format_log_row(r) + "\n";
  const auto rows = parse_training_log(text);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].epoch == 3);
  CHECK(rows[0].total == 2.25);
  CHECK_THROWS(parse_training_log("epoch,lr\n"));
  CHECK_THROWS(parse_training_log(std::string(kTrainLogHeader) + "\n1,2,3\n"));
  CHECK(periodic_checkpoint_path("/x/run.ckpt", 50) == fs::path("/x/run.e00050.ckpt"));
}

TEST_CASE("upscaler training") {
  const auto dir = scratch_dir("upscaler");
  const Dataset d = upscale_data(6, 12);
  TrainSchedule s = sr_schedule();
  s.phase1_epochs = 12;
  s.batch = 3;
  s.crop = 8;
  s.checkpoint_every = 5;

  SUBCASE("zero epochs keep the initial weights") {
    auto m = build_sr_generator<float>({1, 8, 4});
    const auto init = m.export_tensors();
    s.phase1_epochs = 0;
    TrainOptions o;
    o.checkpoint = dir / "zero.ckpt";
    train_sr(m, d, s, o);
    CHECK(nn::checkpoint_read(o.checkpoint) == init);
  }
  SUBCASE("loss falls and runs repeat exactly") {
    auto run = [&](const std::string& tag) {
      auto m = build_e2e_baseline<float>({1, 8, 4});
      TrainOptions o;
      o.checkpoint = dir / (tag + ".ckpt");
      o.log = dir / (tag + ".csv");
      o.deterministic = true;
      const auto r = train_e2e_baseline(m, d, s, o);
      CHECK(r.iterations_per_epoch == 2);
      return r;
    };
    const auto a = run("a"), b = run("b");
    REQUIRE(a.log.size() == 12);
    CHECK(a.log.back().l1 < a.log.front().l1);
    CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    const std::string log = slurp(dir / "a.csv");
    CHECK(log.rfind("# ", 0) == 0);
    CHECK(parse_training_log(log).size() == 12);
    CHECK(fs::exists(dir / "a.e00005.ckpt"));
    CHECK(fs::exists(dir / "a.e00010.ckpt"));
    CHECK(!fs::exists(dir / "a.e00012.ckpt"));
  }
  SUBCASE("scale mismatch") {
    Dataset twice;
    twice.target_scale = 2;
    twice.pairs.push_back({"t", ImageTensor(3, 12, 12), ImageTensor(3, 24, 24), PairKind::RealPair});
    auto m = build_sr_generator<float>({1, 8, 4});
    CHECK_THROWS(train_sr(m, twice, s, {}));
  }
}

TEST_CASE("discriminator separates sharp from blurred crops") {
  std::mt19937_64 rng(12);
  auto disc = build_discriminator<float>({8, 3, 16, 32}, 5);
  std::vector<ImageTensor> sharp, soft;
  for (int i = 0; i < 12; ++i) {
    const auto hr = synthetic_image(32, 32, std::uint64_t(800 + i));
    sharp.push_back(hr);
    soft.push_back(blurred(hr, 2.0));
  }
  auto batch = [&](const std::vector<ImageTensor>& pool, int first, int count) {
    return nn::batch_from_images<float>(std::span(pool).subspan(std::size_t(first), std::size_t(count)));
  };
  nn::AdamConfig adam;
  adam.lr = 1e-3;
  for (int step = 0; step < 150; ++step) {
    const int k = int(rng() % 5) * 2;
    discriminator_step(disc, batch(sharp, k, 2), batch(soft, (k + 4) % 10, 2), adam);
  }
  CHECK(discriminator_accuracy(disc, batch(sharp, 10, 2), batch(soft, 10, 2)) > 0.95);
  CHECK(discriminator_accuracy(disc, batch(sharp, 0, 10), batch(soft, 0, 10)) > 0.95);
}

TEST_CASE("look-alike training") {
  const auto dir = scratch_dir("lookalike");
  const Dataset d = lookalike_data(20, 64, 10);
  auto gen = build_lookalike_generator<float>({1, 8});
  auto disc = build_discriminator<float>({8, 3, 16, 32});
  auto sr = std::make_shared<const Model<float>>(build_sr_generator<float>({2, 8, 4}));
  const FeatureExtractor<float> fx(sr, 2);
  TrainSchedule s = lookalike_schedule();
  s.phase1_epochs = 30;
  s.phase2_epochs = 30;
  s.decay_every = 40;
  s.lr0 = 1e-3;
  s.batch = 4;
  s.crop = 32;
  TrainOptions o;
  o.checkpoint = dir / "gen.ckpt";
  o.log = dir / "gen.csv";
  const auto r = train_lookalike(gen, disc, fx, d, s, o);
  CHECK(r.iterations_per_epoch == 8);
  REQUIRE(r.log.size() == 60);

  // phase-1 L1 under a trailing 5-epoch mean, from epoch 5 on
  double prev = INFINITY;
  for (int e = 4; e < 30; ++e) {
    double mean = 0;
    for (int k = e - 4; k <= e; ++k) mean += r.log[std::size_t(k)].l1 / 5;
    CHECK(mean <= prev);
    prev = mean;
  }
  for (int e = 0; e < 30; ++e) CHECK(r.log[std::size_t(e)].adv_d == 0.0);
  for (int e = 30; e < 60; ++e) {
    CHECK(r.log[std::size_t(e)].adv_d > 0.0);
    CHECK(std::isfinite(r.log[std::size_t(e)].total));
  }
  CHECK(r.log[45].lr == doctest::Approx(1e-4));

  const auto saved = nn::checkpoint_read(o.checkpoint);
  int gen_tensors = 0, disc_tensors = 0;
  for (const auto& t : saved) {
    gen_tensors += t.name.rfind("gen.", 0) == 0;
    disc_tensors += t.name.rfind("disc.", 0) == 0;
  }
  CHECK(gen_tensors == int(gen.params.size()));
  CHECK(disc_tensors == int(disc.params.size()));

  Dataset no_identity = lookalike_data(4, 64, 0);
  CHECK_THROWS(train_lookalike(gen, disc, fx, no_identity, s, {}));
  s.phase2_epochs = 0;
  CHECK_NOTHROW(train_lookalike(gen, disc, fx, no_identity, s, {}));
}
