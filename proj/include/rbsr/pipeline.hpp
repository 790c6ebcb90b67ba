#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rbsr/models.hpp"

namespace rbsr {

struct PipelineBundle {
  std::shared_ptr<const ModelGraph> lookalike;
  std::shared_ptr<const ModelGraph> sr;
  int tile = 0;  ///< 0 processes whole images
  int tile_overlap = 0;
};

/// Reads both checkpoints; the look-alike file may also carry disc.* tensors.
PipelineBundle load_bundle(const std::filesystem::path& lookalike, const std::filesystem::path& sr, int tile = 0,
                           int overlap = 0);

std::shared_ptr<const ModelGraph> load_model(const std::filesystem::path& checkpoint, const std::string& role);

/// Runs `model` over overlapping tiles. Each tile core is evaluated with
/// `overlap` pixels of extra context on its interior sides, and cores are
/// blended with feathered weights across the overlap bands. The output may
/// be `scale` times the input size.
ImageTensor run_tiled(const ModelGraph& model, const ImageTensor& image, int tile, int overlap, int scale);

struct InferResult {
  ImageTensor transformed;  ///< look-alike output, same size as the input
  ImageTensor sr;           ///< 4x output of the SR stage
};

InferResult infer(const PipelineBundle& bundle, const ImageTensor& lr);

struct MethodResult {
  std::string method;  ///< bicubic, baseline, two_step
  ImageTensor output;
  std::optional<double> psnr;
  std::optional<double> ssim;
};

struct CompareReport {
  ImageTensor transformed;
  std::vector<MethodResult> methods;
  bool has_metrics = false;

  /// "method,psnr,ssim" with HR, "method" alone without.
  std::string csv() const;
  /// Method outputs concatenated left to right with 4-pixel white gaps.
  ImageTensor side_by_side() const;
};

/// Bicubic x4 upsampling, the baseline (when given) and the two-step
/// pipeline, with PSNR/SSIM against `hr` when available.
CompareReport compare_methods(const ImageTensor& lr, const std::optional<ImageTensor>& hr,
                              const PipelineBundle& bundle, const ModelGraph* baseline);

/// Writes <method>.ppm, transformed.ppm, side_by_side.ppm and report.csv.
void write_compare_outputs(const CompareReport& report, const std::filesystem::path& outdir);

}  // namespace rbsr
