#include "rbsr/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rbsr/metrics.hpp"
#include "rbsr/resample.hpp"

namespace rbsr {

std::shared_ptr<const ModelGraph> load_model(const std::filesystem::path& checkpoint, const std::string& role) {
  if (!std::filesystem::exists(checkpoint))
    throw std::runtime_error("checkpoint not found: " + checkpoint.string());
  const auto tensors = nn::checkpoint_read(checkpoint);
  try {
    return std::make_shared<const ModelGraph>(model_from_tensors(tensors, role));
  } catch (const std::exception& e) {
    throw std::runtime_error(checkpoint.string() + ": " + e.what());
  }
}

PipelineBundle load_bundle(const std::filesystem::path& lookalike, const std::filesystem::path& sr, int tile,
                           int overlap) {
  PipelineBundle b;
  b.lookalike = load_model(lookalike, "gen");
  b.sr = load_model(sr, "sr");
  b.tile = tile;
  b.tile_overlap = overlap;
  return b;
}

namespace {

struct Span1 {
  int core_lo, core_hi;  // evaluated core
  int ctx_lo, ctx_hi;    // core plus context
};

std::vector<Span1> tile_spans(int n, int tile, int overlap) {
  if (tile <= 0 || n <= tile)
    return {{0, n, 0, n}};
  std::vector<Span1> spans;
  const int stride = tile - overlap;
  for (int a = 0;; a += stride) {
    const int start = std::min(a, n - tile);
    spans.push_back({start, start + tile, std::max(0, start - overlap), std::min(n, start + tile + overlap)});
    if (start + tile >= n)
      break;
  }
  return spans;
}

// Feather weight at position p of a core: ramps up from interior edges.
double feather(int p, const Span1& s, int n, int overlap) {
  if (overlap <= 0)
    return 1.0;
  double d = 1e30;
  if (s.core_lo > 0)
    d = std::min(d, double(p - s.core_lo));
  if (s.core_hi < n)
    d = std::min(d, double(s.core_hi - 1 - p));
  return std::min(1.0, (d + 0.5) / overlap);
}

}  // namespace

ImageTensor run_tiled(const ModelGraph& model, const ImageTensor& image, int tile, int overlap, int scale) {
  if (tile < 0 || overlap < 0 || scale < 1)
    throw std::invalid_argument("run_tiled: invalid tile, overlap or scale");
  if (tile > 0 && overlap >= tile)
    throw std::invalid_argument("run_tiled: overlap must be smaller than the tile");
  if (tile == 0 || (image.height <= tile && image.width <= tile)) {
    ImageTensor out = run_model(model, image);
    if (out.height != image.height * scale || out.width != image.width * scale)
      throw std::runtime_error("model output size does not match scale " + std::to_string(scale));
    return out;
  }

  const auto rows = tile_spans(image.height, tile, overlap);
  const auto cols = tile_spans(image.width, tile, overlap);
  const int oh = image.height * scale, ow = image.width * scale;
  std::vector<double> acc, weight(std::size_t(oh) * ow, 0.0);
  int channels = 0;

  for (const auto& ry : rows)
    for (const auto& rx : cols) {
      const ImageTensor part =
          crop(image, ry.ctx_lo, rx.ctx_lo, ry.ctx_hi - ry.ctx_lo, rx.ctx_hi - rx.ctx_lo);
      const ImageTensor out = run_model(model, part);
      if (out.height != part.height * scale || out.width != part.width * scale)
        throw std::runtime_error("model output size does not match scale " + std::to_string(scale));
      if (acc.empty()) {
        channels = out.channels;
        acc.assign(std::size_t(channels) * oh * ow, 0.0);
      }
      for (int y = ry.core_lo * scale; y < ry.core_hi * scale; ++y) {
        const double wy = feather(y / scale, ry, image.height, overlap);
        for (int x = rx.core_lo * scale; x < rx.core_hi * scale; ++x) {
          const double wgt = wy * feather(x / scale, rx, image.width, overlap);
          weight[std::size_t(y) * ow + x] += wgt;
          for (int c = 0; c < channels; ++c)
            acc[(std::size_t(c) * oh + y) * ow + x] +=
                wgt * out.at(c, y - ry.ctx_lo * scale, x - rx.ctx_lo * scale);
        }
      }
    }

  ImageTensor result(channels, oh, ow);
  for (int c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < std::size_t(oh) * ow; ++i)
      result.data[std::size_t(c) * oh * ow + i] = float(acc[std::size_t(c) * oh * ow + i] / weight[i]);
  return result;
}

InferResult infer(const PipelineBundle& bundle, const ImageTensor& lr) {
  if (!bundle.lookalike || !bundle.sr)
    throw std::invalid_argument("infer: bundle is missing a model");
  if (lr.height < 8 || lr.width < 8)
    throw std::invalid_argument("infer: input must be at least 8x8");
  InferResult r;
  r.transformed = run_tiled(*bundle.lookalike, lr, bundle.tile, bundle.tile_overlap, 1);
  r.sr = run_tiled(*bundle.sr, r.transformed, bundle.tile, bundle.tile_overlap, 4);
  return r;
}

CompareReport compare_methods(const ImageTensor& lr, const std::optional<ImageTensor>& hr,
                              const PipelineBundle& bundle, const ModelGraph* baseline) {
  CompareReport report;
  report.methods.push_back({"bicubic", upsample_bicubic_x4(lr), {}, {}});
  if (baseline)
    report.methods.push_back({"baseline", run_tiled(*baseline, lr, bundle.tile, bundle.tile_overlap, 4), {}, {}});
  InferResult two = infer(bundle, lr);
  report.transformed = std::move(two.transformed);
  report.methods.push_back({"two_step", std::move(two.sr), {}, {}});

  if (hr) {
    report.has_metrics = true;
    for (auto& m : report.methods) {
      if (!m.output.same_shape(*hr))
        throw std::invalid_argument("HR image must be exactly 4x the LR size");
      m.psnr = psnr(m.output, *hr);
      m.ssim = ssim(m.output, *hr);
    }
  }
  return report;
}

std::string CompareReport::csv() const {
  std::ostringstream out;
  out << (has_metrics ? "method,psnr,ssim\n" : "method\n");
  for (const auto& m : methods) {
    out << m.method;
    if (has_metrics)
      out << "," << format_metric(m.psnr.value_or(0.0)) << "," << format_metric(m.ssim.value_or(0.0));
    out << "\n";
  }
  return out.str();
}

ImageTensor CompareReport::side_by_side() const {
  constexpr int kGap = 4;
  if (methods.empty())
    return {};
  int h = 0, w = 0;
  for (const auto& m : methods) {
    h = std::max(h, m.output.height);
    w += m.output.width;
  }
  w += kGap * int(methods.size() - 1);
  const int channels = methods.front().output.channels;
  ImageTensor out(channels, h, w, 1.0f);
  int x0 = 0;
  for (const auto& m : methods) {
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < m.output.height; ++y)
        for (int x = 0; x < m.output.width; ++x) out.at(c, y, x0 + x) = m.output.at(c, y, x);
    x0 += m.output.width + kGap;
  }
  return out;
}

void write_compare_outputs(const CompareReport& report, const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  for (const auto& m : report.methods) save_image(outdir / (m.method + ".ppm"), m.output);
  save_image(outdir / "transformed.ppm", report.transformed);
  save_image(outdir / "side_by_side.ppm", report.side_by_side());
  std::ofstream out(outdir / "report.csv", std::ios::binary);
  out << report.csv();
  if (!out)
    throw std::runtime_error("cannot write " + (outdir / "report.csv").string());
}

}  // namespace rbsr
