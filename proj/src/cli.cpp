#include "rbsr/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rbsr/config.hpp"
#include "rbsr/degrade.hpp"
#include "rbsr/kernel_estim.hpp"
#include "rbsr/metrics.hpp"
#include "rbsr/pipeline.hpp"
#include "rbsr/resample.hpp"
#include "rbsr/selftest.hpp"
#include "rbsr/trainer.hpp"

namespace rbsr {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  int threads = 0;
  bool desk_scale = false;
};

struct Context {
  RunConfig cfg;
  bool has_config = false;
  bool deterministic = false;
};

Context make_context(const Globals& g) {
  Context ctx;
  ctx.has_config = !g.config.empty();
  ctx.cfg = ctx.has_config ? load_config(g.config, g.desk_scale) : parse_config("", {}, g.desk_scale);
  if (g.seed)
    for (TrainSchedule* s : {&ctx.cfg.lookalike_schedule, &ctx.cfg.sr_schedule, &ctx.cfg.e2e_schedule})
      s->seed = *g.seed;
  ctx.deterministic = g.deterministic || ctx.cfg.deterministic;
  if (g.seed)
    ctx.cfg.hash = fnv1a_hex(describe_config(ctx.cfg));
  const int threads = g.threads > 0 ? g.threads : ctx.cfg.threads;
#ifdef _OPENMP
  if (threads > 0)
    omp_set_num_threads(threads);
#else
  (void)threads;
#endif
  return ctx;
}

std::filesystem::path pick(const std::string& option, const char* flag, const Context& ctx, const char* key) {
  if (!option.empty())
    return option;
  if (!ctx.has_config)
    throw UsageError(std::string(flag) + " is required (or set [paths] " + key + " in --config)");
  return ctx.cfg.require_path(key);
}

std::filesystem::path log_path(const std::string& option, const std::filesystem::path& checkpoint,
                               const Context& ctx, const std::string& procedure) {
  if (!option.empty())
    return option;
  if (const auto dir = ctx.cfg.path("log_dir"))
    return *dir / (procedure + ".csv");
  auto p = checkpoint;
  return p.replace_extension(".csv");
}

Boundary parse_boundary(const std::string& s) {
  if (s == "reflect")
    return Boundary::Reflect;
  if (s == "clamp")
    return Boundary::Clamp;
  throw UsageError("boundary must be reflect or clamp");
}

SubsamplePhase parse_phase(const std::string& s) {
  if (s == "centered")
    return SubsamplePhase::Centered;
  if (s == "topleft")
    return SubsamplePhase::TopLeft;
  throw UsageError("phase must be centered or topleft");
}

std::pair<int, int> parse_pair(const std::string& s, char sep, const std::string& what) {
  const auto cut = s.find(sep);
  try {
    std::size_t used = 0;
    const int a = std::stoi(s.substr(0, cut), &used);
    if (used != (cut == std::string::npos ? s.size() : cut))
      throw std::invalid_argument(s);
    int b = 1;
    if (cut != std::string::npos) {
      b = std::stoi(s.substr(cut + 1), &used);
      if (used != s.size() - cut - 1)
        throw std::invalid_argument(s);
    }
    if (a < 1 || b < 1)
      throw std::invalid_argument(s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("malformed " + what + " '" + s + "'");
  }
}

std::pair<int, int> parse_ratio(const std::string& s) { return parse_pair(s, '/', "scale"); }

std::pair<int, int> parse_grid(const std::string& s) {
  if (s.find('x') == std::string::npos)
    throw UsageError("grid must be RxC");
  return parse_pair(s, 'x', "grid");
}

void print_summary(const TrainResult& r, const std::filesystem::path& checkpoint) {
  std::cout << "iterations per epoch: " << r.iterations_per_epoch << "\n";
  if (!r.log.empty())
    std::cout << "epochs: " << r.log.size() << ", first l1: " << r.log.front().l1 << ", last l1: " << r.log.back().l1
              << "\n";
  std::cout << "checkpoint: " << checkpoint.string() << "\n";
}

std::uint64_t model_seed(const TrainSchedule& s, std::uint64_t salt) { return s.seed * 1000003ull + salt; }

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Two-step real-world super-resolution toolkit: bicubic look-alike transform, then bicubic SR",
               "rbsr"};
  app.set_version_flag("--version", kVersion);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration file (INI)");
  app.add_option("--seed", g.seed, "Seed for sampling, initialization and noise");
  app.add_flag("--deterministic", g.deterministic, "Bit-reproducible outputs (zeroes log timings)");
  app.add_option("--threads", g.threads, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--desk-scale", g.desk_scale, "Shrink the full-size defaults to a desk-scale preset");

  std::function<void()> action;

  // resize
  auto* resize_cmd = app.add_subcommand("resize", "Bicubic resampling by a rational factor");
  std::string r_in, r_out, r_scale = "1/4", r_boundary = "reflect";
  double r_a = -0.5;
  bool r_no_aa = false;
  resize_cmd->add_option("--in", r_in)->required();
  resize_cmd->add_option("--out", r_out)->required();
  resize_cmd->add_option("--scale", r_scale, "Factor N/D (or N)");
  resize_cmd->add_option("--a", r_a, "Cubic parameter");
  resize_cmd->add_flag("--no-antialias", r_no_aa);
  resize_cmd->add_option("--boundary", r_boundary);
  resize_cmd->callback([&] {
    action = [&] {
      const auto [num, den] = parse_ratio(r_scale);
      ResampleSpec spec{num, den, r_a, !r_no_aa, parse_boundary(r_boundary)};
      save_image(r_out, resize(load_image(r_in), spec));
    };
  });

  // degrade
  auto* degrade_cmd = app.add_subcommand("degrade", "Blur, subsample and add noise");
  std::string d_in, d_out, d_kernel = "gaussian:1.2:13", d_phase = "centered", d_boundary = "reflect";
  int d_scale = 4;
  double d_noise = 0.0;
  degrade_cmd->add_option("--in", d_in)->required();
  degrade_cmd->add_option("--out", d_out)->required();
  degrade_cmd->add_option("--kernel", d_kernel, "gaussian:SIGMA:SIZE or a kernel text file");
  degrade_cmd->add_option("--scale", d_scale)->check(CLI::PositiveNumber);
  degrade_cmd->add_option("--noise", d_noise, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  degrade_cmd->add_option("--phase", d_phase, "centered or topleft");
  degrade_cmd->add_option("--boundary", d_boundary);
  degrade_cmd->callback([&] {
    action = [&] {
      DegradationParams p;
      p.kernel = kernel_from_spec(d_kernel);
      p.scale = d_scale;
      p.noise_sigma = d_noise;
      p.seed = g.seed.value_or(0);
      p.boundary = parse_boundary(d_boundary);
      p.phase = parse_phase(d_phase);
      save_image(d_out, degrade(load_image(d_in), p));
    };
  });

  // estimate-kernel
  auto* est_cmd = app.add_subcommand("estimate-kernel", "Patchwise regularized least-squares blur estimation");
  std::string e_hr, e_lr, e_dump, e_image, e_grid, e_solver = "auto", e_phase = "centered";
  EstimationConfig ecfg;
  est_cmd->add_option("--hr", e_hr)->required();
  est_cmd->add_option("--lr", e_lr)->required();
  est_cmd->add_option("--ksize", ecfg.kernel_size);
  est_cmd->add_option("--lambda", ecfg.lambda)->check(CLI::NonNegativeNumber);
  est_cmd->add_option("--scale", ecfg.scale)->check(CLI::PositiveNumber);
  est_cmd->add_option("--patch", ecfg.patch_hr, "HR patch side (0 = whole cell)");
  est_cmd->add_option("--grid", e_grid, "Block grid RxC");
  est_cmd->add_flag("--sum-to-one", ecfg.sum_to_one);
  est_cmd->add_option("--solver", e_solver, "auto, direct or cg");
  est_cmd->add_option("--phase", e_phase);
  est_cmd->add_option("--dump", e_dump, "Kernel text dump (stdout when omitted)");
  est_cmd->add_option("--out", e_image, "Kernel grid visualization");
  est_cmd->callback([&] {
    action = [&] {
      if (e_solver == "auto")
        ecfg.solver = KernelSolver::Auto;
      else if (e_solver == "direct")
        ecfg.solver = KernelSolver::Direct;
      else if (e_solver == "cg")
        ecfg.solver = KernelSolver::ConjugateGradient;
      else
        throw UsageError("solver must be auto, direct or cg");
      ecfg.phase = parse_phase(e_phase);
      if (!e_grid.empty())
        std::tie(ecfg.grid_rows, ecfg.grid_cols) = parse_grid(e_grid);
      const KernelGrid grid = estimate_patchwise(load_image(e_hr), load_image(e_lr), ecfg);
      const std::string dump = format_kernel_dump(grid);
      if (e_dump.empty()) {
        std::cout << dump;
      } else {
        std::ofstream out(e_dump, std::ios::binary);
        out << dump;
        if (!out)
          throw std::runtime_error("cannot write " + e_dump);
      }
      if (!e_image.empty())
        save_image(e_image, kernel_grid_render(grid));
    };
  });

  // training subcommands
  std::string t_manifest, t_checkpoint, t_log, t_extractor;
  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", t_manifest, "Training manifest (kind<TAB>input<TAB>target)");
    cmd->add_option("--checkpoint", t_checkpoint, "Output checkpoint");
    cmd->add_option("--log", t_log, "CSV training log");
  };

  auto* train_sr_cmd = app.add_subcommand("train-sr", "L1 training of the bicubic SR generator");
  add_train_options(train_sr_cmd);
  auto* train_e2e_cmd = app.add_subcommand("train-e2e", "L1 training of the end-to-end baseline");
  add_train_options(train_e2e_cmd);
  auto* train_la_cmd = app.add_subcommand("train-lookalike", "Two-phase training of the look-alike generator");
  add_train_options(train_la_cmd);
  train_la_cmd->add_option("--extractor", t_extractor, "Trained SR checkpoint for the perceptual loss");

  auto upscaler_action = [&](bool e2e) {
    return [&, e2e] {
      const Context ctx = make_context(g);
      const char* prefix = e2e ? "e2e" : "sr";
      const auto manifest = pick(t_manifest, "--manifest", ctx, e2e ? "e2e_manifest" : "sr_manifest");
      const auto checkpoint = pick(t_checkpoint, "--checkpoint", ctx, e2e ? "e2e_checkpoint" : "sr_checkpoint");
      const TrainSchedule& schedule = e2e ? ctx.cfg.e2e_schedule : ctx.cfg.sr_schedule;
      const Dataset data = load_dataset(read_manifest(manifest), 4);
      Model<float> model = e2e ? build_e2e_baseline<float>(ctx.cfg.e2e, model_seed(schedule, 4))
                               : build_sr_generator<float>(ctx.cfg.sr, model_seed(schedule, 2));
      TrainOptions opt;
      opt.checkpoint = checkpoint;
      opt.log = log_path(t_log, checkpoint, ctx, std::string("train-") + prefix);
      opt.deterministic = ctx.deterministic;
      opt.config_hash = ctx.cfg.hash;
      print_summary(train_upscaler(model, data, schedule, opt), checkpoint);
    };
  };
  train_sr_cmd->callback([&] { action = upscaler_action(false); });
  train_e2e_cmd->callback([&] { action = upscaler_action(true); });
  train_la_cmd->callback([&] {
    action = [&] {
      const Context ctx = make_context(g);
      const auto manifest = pick(t_manifest, "--manifest", ctx, "lookalike_manifest");
      const auto checkpoint = pick(t_checkpoint, "--checkpoint", ctx, "lookalike_checkpoint");
      const auto extractor_path = pick(t_extractor, "--extractor", ctx, "sr_checkpoint");
      const TrainSchedule& schedule = ctx.cfg.lookalike_schedule;
      const auto sr = load_model(extractor_path, "sr");
      const int tap = ctx.cfg.tap_block > 0 ? ctx.cfg.tap_block : sr->residual_blocks();
      const FeatureExtractor<float> fx(sr, tap);
      const Dataset data = load_dataset(read_manifest(manifest), 1);
      DiscriminatorConfig dcfg = ctx.cfg.discriminator;
      dcfg.input_size = schedule.crop;
      Model<float> gen = build_lookalike_generator<float>(ctx.cfg.lookalike, model_seed(schedule, 1));
      Model<float> disc = build_discriminator<float>(dcfg, model_seed(schedule, 3));
      TrainOptions opt;
      opt.checkpoint = checkpoint;
      opt.log = log_path(t_log, checkpoint, ctx, "train-lookalike");
      opt.deterministic = ctx.deterministic;
      opt.config_hash = ctx.cfg.hash;
      print_summary(train_lookalike(gen, disc, fx, data, schedule, opt), checkpoint);
    };
  });

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "Two-step inference: look-alike transform, then SR");
  std::string i_la, i_sr, i_in, i_out_sr, i_out_t;
  int i_tile = 0, i_overlap = 0;
  infer_cmd->add_option("--lookalike", i_la, "Look-alike generator checkpoint");
  infer_cmd->add_option("--sr", i_sr, "SR generator checkpoint");
  infer_cmd->add_option("--in", i_in)->required();
  infer_cmd->add_option("--out-sr", i_out_sr)->required();
  infer_cmd->add_option("--out-transformed", i_out_t);
  infer_cmd->add_option("--tile", i_tile)->check(CLI::NonNegativeNumber);
  infer_cmd->add_option("--overlap", i_overlap)->check(CLI::NonNegativeNumber);
  infer_cmd->callback([&] {
    action = [&] {
      const Context ctx = make_context(g);
      const PipelineBundle bundle = load_bundle(pick(i_la, "--lookalike", ctx, "lookalike_checkpoint"),
                                                pick(i_sr, "--sr", ctx, "sr_checkpoint"), i_tile, i_overlap);
      const InferResult r = infer(bundle, load_image(i_in));
      save_image(i_out_sr, r.sr);
      if (!i_out_t.empty())
        save_image(i_out_t, r.transformed);
    };
  });

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Bicubic vs baseline vs two-step, with metrics given HR");
  std::string c_lr, c_hr, c_la, c_sr, c_base, c_out;
  int c_tile = 0, c_overlap = 0;
  compare_cmd->add_option("--lr", c_lr)->required();
  compare_cmd->add_option("--hr", c_hr);
  compare_cmd->add_option("--lookalike", c_la);
  compare_cmd->add_option("--sr", c_sr);
  compare_cmd->add_option("--baseline", c_base, "End-to-end baseline checkpoint");
  compare_cmd->add_option("--outdir", c_out);
  compare_cmd->add_option("--tile", c_tile)->check(CLI::NonNegativeNumber);
  compare_cmd->add_option("--overlap", c_overlap)->check(CLI::NonNegativeNumber);
  compare_cmd->callback([&] {
    action = [&] {
      const Context ctx = make_context(g);
      const PipelineBundle bundle = load_bundle(pick(c_la, "--lookalike", ctx, "lookalike_checkpoint"),
                                                pick(c_sr, "--sr", ctx, "sr_checkpoint"), c_tile, c_overlap);
      std::shared_ptr<const ModelGraph> baseline;
      if (!c_base.empty())
        baseline = load_model(c_base, "e2e");
      else if (const auto p = ctx.cfg.path("e2e_checkpoint"))
        baseline = load_model(*p, "e2e");
      std::optional<ImageTensor> hr;
      if (!c_hr.empty())
        hr = load_image(c_hr);
      const CompareReport report = compare_methods(load_image(c_lr), hr, bundle, baseline.get());
      write_compare_outputs(report, pick(c_out, "--outdir", ctx, "output_dir"));
      std::cout << report.csv();
    };
  });

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR/SSIM over output<TAB>reference pairs");
  std::string v_pairs, v_out;
  double v_peak = 1.0;
  eval_cmd->add_option("--pairs", v_pairs)->required();
  eval_cmd->add_option("--out", v_out, "CSV report (stdout when omitted)");
  eval_cmd->add_option("--peak", v_peak)->check(CLI::PositiveNumber);
  eval_cmd->callback([&] {
    action = [&] {
      make_context(g);
      const std::string csv = metrics_csv(evaluate_pairs(read_pair_list(v_pairs), v_peak, SsimConfig{}));
      if (v_out.empty()) {
        std::cout << csv;
        return;
      }
      std::ofstream out(v_out, std::ios::binary);
      out << csv;
      if (!out)
        throw std::runtime_error("cannot write " + v_out);
    };
  });

  // selftest
  auto* self_cmd = app.add_subcommand("selftest", "Embedded invariant suite");
  int self_failed = 0;
  self_cmd->callback([&] {
    action = [&] {
      make_context(g);
      self_failed = run_selftest(std::cout);
      if (self_failed)
        throw std::runtime_error(std::to_string(self_failed) + " selftest group(s) failed");
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (!action) {
    std::cerr << app.help();
    return 1;
  }
  try {
    action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace rbsr
