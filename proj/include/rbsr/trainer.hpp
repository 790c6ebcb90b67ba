#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rbsr/losses.hpp"
#include "rbsr/models.hpp"

namespace rbsr {

enum class PairKind { RealPair, SyntheticPair, IdentityBicubic };

std::string pair_kind_name(PairKind kind);
PairKind parse_pair_kind(const std::string& name);

struct ManifestEntry {
  std::filesystem::path input_path;
  std::filesystem::path target_path;
  PairKind kind = PairKind::RealPair;
};

using Manifest = std::vector<ManifestEntry>;

/// One `kind<TAB>input<TAB>target` line per entry; '#' lines and blank lines
/// are skipped. Relative paths resolve against `base`.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base = {});
Manifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct TrainSchedule {
  int phase1_epochs = 1000;
  int phase2_epochs = 3000;
  double lr0 = 1e-4;
  int decay_every = 800;
  double decay_factor = 0.1;
  int batch = 16;
  int crop = 128;  ///< input crop; targets are cropped at crop x target scale
  std::uint64_t seed = 1;
  LossWeights weights;
  int checkpoint_every = 0;  ///< periodic checkpoints, 0 disables
};

TrainSchedule lookalike_schedule();
TrainSchedule sr_schedule();
TrainSchedule e2e_schedule();

/// lr0 * decay_factor^floor(epoch / decay_every).
double lr_at_epoch(int epoch, const TrainSchedule& schedule);

struct TrainingPair {
  std::string name;
  ImageTensor input;
  ImageTensor target;
  PairKind kind = PairKind::RealPair;
};

struct Dataset {
  std::vector<TrainingPair> pairs;
  int target_scale = 1;
};

/// Decodes every entry. Targets must be exactly target_scale times the input
/// size; identity entries require target_scale 1.
Dataset load_dataset(const Manifest& manifest, int target_scale);
/// Same checks for images already in memory.
void validate_dataset(const Dataset& data);

struct Batch {
  Tensor4<float> inputs;
  Tensor4<float> targets;
  std::vector<PairKind> kinds;
  std::vector<int> entries;
};

/// Uniform entry selection with replacement and one uniform crop window per
/// draw, shared by input and (scaled) target.
Batch sample_batch(const Dataset& data, int crop, int batch, std::mt19937_64& rng);

/// Draws crops of the targets of `pool` entries only (the discriminator's
/// real side).
Tensor4<float> sample_targets(const Dataset& data, const std::vector<int>& pool, int crop, int batch,
                              std::mt19937_64& rng);

/// Iterations per epoch: ceil(dataset size / batch).
int iterations_per_epoch(std::size_t dataset_size, int batch);

template <class T>
void adam_update(Model<T>& model, const nn::AdamConfig& config);

struct DiscriminatorStep {
  double loss_d = 0.0;
  double accuracy = 0.0;
};

/// One discriminator update on a real and a fake batch.
DiscriminatorStep discriminator_step(Model<float>& disc, const Tensor4<float>& real, const Tensor4<float>& fake,
                                     const nn::AdamConfig& adam);

/// Fraction of samples classified correctly at threshold 0.5.
double discriminator_accuracy(const Model<float>& disc, const Tensor4<float>& real, const Tensor4<float>& fake);

struct TrainLogRow {
  int epoch = 0;
  double lr = 0.0;
  double l1 = 0.0;
  double perc = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
  double total = 0.0;
  double seconds = 0.0;
};

inline constexpr const char* kTrainLogHeader = "epoch,lr,l1,perc,adv_g,adv_d,total,seconds";
std::string format_log_row(const TrainLogRow& row);
std::vector<TrainLogRow> parse_training_log(const std::string& text);

struct TrainOptions {
  std::filesystem::path checkpoint;  ///< final checkpoint, empty to skip
  std::filesystem::path log;         ///< CSV log, empty to skip
  bool deterministic = false;        ///< zero the seconds column
  std::string config_hash;
  std::function<void(const TrainLogRow&)> on_epoch;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  int iterations_per_epoch = 0;
};

/// Single-phase L1 training of an upscaling model (train-sr, train-e2e).
/// Runs schedule.phase1_epochs epochs.
TrainResult train_upscaler(Model<float>& model, const Dataset& data, const TrainSchedule& schedule,
                           const TrainOptions& options);

inline TrainResult train_sr(Model<float>& model, const Dataset& data, const TrainSchedule& schedule,
                            const TrainOptions& options) {
  return train_upscaler(model, data, schedule, options);
}

inline TrainResult train_e2e_baseline(Model<float>& model, const Dataset& data, const TrainSchedule& schedule,
                                      const TrainOptions& options) {
  return train_upscaler(model, data, schedule, options);
}

/// Two-phase look-alike training. Phase 1 uses alpha * L1 only; phase 2
/// alternates one discriminator and one generator update per batch with the
/// full weighted loss. The discriminator's real side is drawn from the
/// targets of identity entries.
TrainResult train_lookalike(Model<float>& gen, Model<float>& disc, const FeatureExtractor<float>& extractor,
                            const Dataset& data, const TrainSchedule& schedule, const TrainOptions& options);

/// "<stem>.e<epoch><ext>" next to the final checkpoint.
std::filesystem::path periodic_checkpoint_path(const std::filesystem::path& final_path, int epoch);

}  // namespace rbsr
