#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rbsr/cli.hpp"
#include "rbsr/config.hpp"
#include "rbsr/nn/checkpoint.hpp"
#include "rbsr/resample.hpp"
#include "rbsr/synthetic.hpp"

using namespace rbsr;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "rbsr");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return dispatch(int(args.size()), argv.data());
}

ConfigError::Kind config_error(const std::string& text, int* line = nullptr) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    if (line)
      *line = e.line();
    return e.kind();
  }
  FAIL("config accepted: " << text);
  return ConfigError::Kind::Syntax;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("configuration defaults") {
  const auto c = default_config(false);
  CHECK(c.lookalike_schedule.batch == 16);
  CHECK(c.lookalike_schedule.crop == 128);
  CHECK(c.lookalike_schedule.weights.alpha == 1.0);
  CHECK(c.lookalike_schedule.weights.beta == 3.0);
  CHECK(c.lookalike_schedule.weights.gamma == 1.0);
  CHECK(c.lookalike.n_res_blocks == 8);
  CHECK(c.lookalike.channels == 64);
  CHECK(c.sr.n_res_blocks == 16);
  CHECK(c.e2e.n_res_blocks == 24);
  CHECK(c.discriminator.dense_width == 1024);
  const auto desk = default_config(true);
  CHECK(desk.sr.channels < c.sr.channels);
  CHECK(describe_config(c) != describe_config(desk));
  CHECK(describe_config(parse_config("")) == describe_config(c));
  CHECK(parse_config("").hash == fnv1a_hex(describe_config(c)));
}

TEST_CASE("configuration parsing") {
  const auto c = parse_config("# run\n[sr]\nblocks = 4\n[schedule.sr]\nepochs = 7\n[loss]\nbeta = 2.5\n[run]\ndeterministic = true\n");
  CHECK(c.sr.n_res_blocks == 4);
  CHECK(c.sr_schedule.phase1_epochs == 7);
  CHECK(c.lookalike_schedule.weights.beta == 2.5);
  CHECK(c.deterministic);
  CHECK(c.hash != parse_config("").hash);

  int line = 0;
  CHECK(config_error("[schedule]\n\nbatchsize = 4\n", &line) == ConfigError::Kind::UnknownKey);
  CHECK(line == 3);
  CHECK(config_error("[sr]\nblocks = many\n", &line) == ConfigError::Kind::TypeMismatch);
  CHECK(line == 2);
  CHECK(config_error("[mystery]\n") == ConfigError::Kind::UnknownKey);
  CHECK(config_error("[sr\n") == ConfigError::Kind::Syntax);
  CHECK(config_error("[sr]\nscale = 3\n") == ConfigError::Kind::TypeMismatch);

  const auto p = parse_config("[paths]\nsr_manifest = data/m.txt\n", "/base");
  CHECK(p.require_path("sr_manifest") == fs::path("/base/data/m.txt"));
  try {
    p.require_path("sr_checkpoint");
    FAIL("missing path accepted");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == ConfigError::Kind::MissingPath);
    CHECK(std::string(e.what()).find("sr_checkpoint") != std::string::npos);
  }
  CHECK(!p.path("e2e_manifest").has_value());
}

TEST_CASE("dispatch exit codes") {
  const fs::path dir = fs::temp_directory_path() / "rbsr_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_image(dir / "lr.ppm", synthetic_image(16, 16, 1));

  CHECK(run({"no-such-command"}) == 1);
  CHECK(run({"--version"}) == 0);
  CHECK(run({"resize", "--in", (dir / "lr.ppm").string(), "--out", (dir / "up.ppm").string(), "--scale", "4"}) == 0);
  CHECK(load_image(dir / "up.ppm").width == 64);
  CHECK(run({"resize", "--in", (dir / "lr.ppm").string(), "--out", (dir / "x.ppm").string(), "--scale", "x"}) == 1);
  CHECK(run({"resize", "--in", (dir / "missing.ppm").string(), "--out", (dir / "x.ppm").string()}) == 2);
  CHECK(run({"infer", "--lookalike", (dir / "none.ckpt").string(), "--sr", (dir / "none.ckpt").string(), "--in",
             (dir / "lr.ppm").string(), "--out-sr", (dir / "sr.ppm").string()}) == 2);
  CHECK(run({"train-sr"}) == 1);

  std::ofstream(dir / "bad.ini") << "[schedule]\nbatchsize = 4\n";
  CHECK(run({"--config", (dir / "bad.ini").string(), "selftest"}) == 2);
}

TEST_CASE("selftest subcommand") { CHECK(run({"selftest"}) == 0); }

TEST_CASE("deterministic training through the command line") {
  const fs::path dir = fs::temp_directory_path() / "rbsr_cli_train";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream manifest(dir / "train.txt");
  for (int i = 0; i < 4; ++i) {
    const auto hr = synthetic_image(64, 64, std::uint64_t(40 + i));
    const std::string n = std::to_string(i);
    save_image(dir / ("hr" + n + ".ppm"), hr);
    save_image(dir / ("lr" + n + ".ppm"), downsample_bicubic_x4(hr));
    manifest << "real_pair\tlr" << n << ".ppm\thr" << n << ".ppm\n";
  }
  manifest.close();
  std::ofstream(dir / "run.ini") << "[sr]\nblocks = 1\nchannels = 8\n[schedule.sr]\nepochs = 3\nbatch = 2\ncrop = 8\n";
  auto train = [&](const std::string& tag) {
    return run({"--config", (dir / "run.ini").string(), "--deterministic", "train-sr", "--manifest",
                (dir / "train.txt").string(), "--checkpoint", (dir / (tag + ".ckpt")).string(), "--log",
                (dir / (tag + ".csv")).string()});
  };
  REQUIRE(train("a") == 0);
  REQUIRE(train("b") == 0);
  CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(nn::checkpoint_read(dir / "a.ckpt").size() == build_sr_generator<float>({1, 8, 4}).params.size());
}
