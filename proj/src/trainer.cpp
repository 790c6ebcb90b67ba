#include "rbsr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rbsr {

std::string pair_kind_name(PairKind kind) {
  switch (kind) {
    case PairKind::RealPair:
      return "real_pair";
    case PairKind::SyntheticPair:
      return "synthetic_pair";
    case PairKind::IdentityBicubic:
      return "identity_bicubic";
  }
  return "?";
}

PairKind parse_pair_kind(const std::string& name) {
  if (name == "real_pair")
    return PairKind::RealPair;
  if (name == "synthetic_pair")
    return PairKind::SyntheticPair;
  if (name == "identity_bicubic")
    return PairKind::IdentityBicubic;
  throw std::invalid_argument("unknown pair kind '" + name + "'");
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base) {
  Manifest out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == '#')
      continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": expected kind<TAB>input<TAB>target");
    ManifestEntry e;
    try {
      e.kind = parse_pair_kind(line.substr(0, t1));
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": " + err.what());
    }
    e.input_path = resolve(line.substr(t1 + 1, t2 - t1 - 1));
    e.target_path = resolve(line.substr(t2 + 1));
    if (e.kind == PairKind::IdentityBicubic && e.input_path != e.target_path)
      throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                  ": identity_bicubic entries need input = target");
    out.push_back(std::move(e));
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_manifest(text.str(), path.parent_path());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string format_manifest(const Manifest& manifest) {
  std::string out;
  for (const auto& e : manifest)
    out += pair_kind_name(e.kind) + "\t" + e.input_path.string() + "\t" + e.target_path.string() + "\n";
  return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  out << format_manifest(manifest);
  if (!out)
    throw std::runtime_error("cannot write manifest " + path.string());
}

TrainSchedule lookalike_schedule() { return TrainSchedule{}; }

TrainSchedule sr_schedule() {
  TrainSchedule s;
  s.phase1_epochs = 4000;
  s.phase2_epochs = 0;
  s.lr0 = 1e-3;
  s.decay_every = 1000;
  return s;
}

TrainSchedule e2e_schedule() {
  TrainSchedule s;
  s.phase1_epochs = 4000;
  s.phase2_epochs = 0;
  return s;
}

double lr_at_epoch(int epoch, const TrainSchedule& schedule) {
  if (epoch < 0)
    throw std::invalid_argument("lr_at_epoch: negative epoch");
  if (schedule.decay_every < 1 || !(schedule.decay_factor > 0.0))
    throw std::invalid_argument("lr_at_epoch: decay_every must be >= 1 and decay_factor > 0");
  return schedule.lr0 * std::pow(schedule.decay_factor, epoch / schedule.decay_every);
}

void validate_dataset(const Dataset& data) {
  const int s = data.target_scale;
  if (s < 1)
    throw std::invalid_argument("dataset target scale must be >= 1");
  for (const auto& p : data.pairs) {
    if (p.kind == PairKind::IdentityBicubic && s != 1)
      throw std::invalid_argument(p.name + ": identity_bicubic entries need equal-size targets");
    if (p.target.height != s * p.input.height || p.target.width != s * p.input.width ||
        p.target.channels != p.input.channels)
      throw std::invalid_argument(p.name + ": pair dimension mismatch (input " + std::to_string(p.input.width) +
                                  "x" + std::to_string(p.input.height) + ", target " +
                                  std::to_string(p.target.width) + "x" + std::to_string(p.target.height) +
                                  ", expected scale " + std::to_string(s) + ")");
  }
}

Dataset load_dataset(const Manifest& manifest, int target_scale) {
  Dataset data;
  data.target_scale = target_scale;
  for (const auto& e : manifest) {
    TrainingPair p;
    p.name = e.input_path.filename().string();
    p.kind = e.kind;
    p.input = load_image(e.input_path);
    p.target = e.input_path == e.target_path ? p.input : load_image(e.target_path);
    data.pairs.push_back(std::move(p));
  }
  validate_dataset(data);
  return data;
}

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t n) { return std::size_t(rng() % n); }

void copy_window(const ImageTensor& src, int y0, int x0, int size, Tensor4<float>& dst, int index) {
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < size; ++y) {
      const float* row = &src.data[(std::size_t(c) * src.height + y0 + y) * src.width + x0];
      std::copy(row, row + size, dst.plane(index, c) + std::size_t(y) * size);
    }
}

void require_crop(const TrainingPair& p, int crop) {
  if (p.input.height < crop || p.input.width < crop)
    throw std::invalid_argument(p.name + ": image " + std::to_string(p.input.width) + "x" +
                                std::to_string(p.input.height) + " smaller than crop " + std::to_string(crop));
}

}  // namespace

Batch sample_batch(const Dataset& data, int crop, int batch, std::mt19937_64& rng) {
  if (data.pairs.empty())
    throw std::invalid_argument("sample_batch: empty dataset");
  if (crop < 1 || batch < 1)
    throw std::invalid_argument("sample_batch: crop and batch must be >= 1");
  const int s = data.target_scale;
  const int channels = data.pairs.front().input.channels;
  Batch b;
  b.inputs = Tensor4<float>(batch, channels, crop, crop);
  b.targets = Tensor4<float>(batch, channels, crop * s, crop * s);
  for (int i = 0; i < batch; ++i) {
    const int idx = int(draw(rng, data.pairs.size()));
    const TrainingPair& p = data.pairs[std::size_t(idx)];
    require_crop(p, crop);
    if (p.input.channels != channels)
      throw std::invalid_argument(p.name + ": channel count differs from the rest of the dataset");
    const int y0 = int(draw(rng, std::size_t(p.input.height - crop + 1)));
    const int x0 = int(draw(rng, std::size_t(p.input.width - crop + 1)));
    copy_window(p.input, y0, x0, crop, b.inputs, i);
    copy_window(p.target, y0 * s, x0 * s, crop * s, b.targets, i);
    b.kinds.push_back(p.kind);
    b.entries.push_back(idx);
  }
  return b;
}

Tensor4<float> sample_targets(const Dataset& data, const std::vector<int>& pool, int crop, int batch,
                              std::mt19937_64& rng) {
  if (pool.empty())
    throw std::invalid_argument("sample_targets: empty pool");
  const int size = crop * data.target_scale;
  Tensor4<float> out(batch, data.pairs[std::size_t(pool.front())].target.channels, size, size);
  for (int i = 0; i < batch; ++i) {
    const TrainingPair& p = data.pairs[std::size_t(pool[draw(rng, pool.size())])];
    require_crop(p, crop);
    const int y0 = int(draw(rng, std::size_t(p.target.height - size + 1)));
    const int x0 = int(draw(rng, std::size_t(p.target.width - size + 1)));
    copy_window(p.target, y0, x0, size, out, i);
  }
  return out;
}

int iterations_per_epoch(std::size_t dataset_size, int batch) {
  if (batch < 1)
    throw std::invalid_argument("batch must be >= 1");
  return int((dataset_size + std::size_t(batch) - 1) / std::size_t(batch));
}

template <class T>
void adam_update(Model<T>& model, const nn::AdamConfig& config) {
  for (auto& p : model.params) nn::adam_step(p, config);
}

template void adam_update<float>(Model<float>&, const nn::AdamConfig&);
template void adam_update<double>(Model<double>&, const nn::AdamConfig&);

namespace {

std::vector<double> probabilities(const Tensor4<float>& d) {
  return std::vector<double>(d.vec().begin(), d.vec().end());
}

Tensor4<float> output_gradient(const Shape4& shape, const std::vector<double>& g) {
  Tensor4<float> out(shape);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = float(g[i]);
  return out;
}

double accuracy_of(const std::vector<double>& real, const std::vector<double>& fake) {
  std::size_t correct = 0;
  for (double p : real) correct += p > 0.5;
  for (double p : fake) correct += p < 0.5;
  return double(correct) / double(real.size() + fake.size());
}

}  // namespace

DiscriminatorStep discriminator_step(Model<float>& disc, const Tensor4<float>& real, const Tensor4<float>& fake,
                                     const nn::AdamConfig& adam) {
  ForwardTrace<float> tr_real, tr_fake;
  const auto d_real = probabilities(disc.forward(real, &tr_real));
  const auto d_fake = probabilities(disc.forward(fake, &tr_fake));
  const AdversarialLosses adv = adversarial_losses(d_real, d_fake);
  disc.zero_grad();
  disc.backward(tr_real, output_gradient(tr_real.outputs.back().shape(), adv.d_loss_d_real));
  disc.backward(tr_fake, output_gradient(tr_fake.outputs.back().shape(), adv.d_loss_d_fake));
  adam_update(disc, adam);
  return {adv.loss_d, accuracy_of(d_real, d_fake)};
}

double discriminator_accuracy(const Model<float>& disc, const Tensor4<float>& real, const Tensor4<float>& fake) {
  return accuracy_of(probabilities(disc.forward(real)), probabilities(disc.forward(fake)));
}

std::string format_log_row(const TrainLogRow& r) {
  std::ostringstream out;
  out.precision(9);
  out << r.epoch << "," << r.lr << "," << r.l1 << "," << r.perc << "," << r.adv_g << "," << r.adv_d << ","
      << r.total << "," << r.seconds;
  return out.str();
}

std::vector<TrainLogRow> parse_training_log(const std::string& text) {
  std::vector<TrainLogRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    if (!header) {
      if (line != kTrainLogHeader)
        throw std::invalid_argument("training log: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 8)
      throw std::invalid_argument("training log: expected 8 fields in '" + line + "'");
    TrainLogRow r;
    std::size_t used = 0;
    r.epoch = std::stoi(f[0], &used);
    if (used != f[0].size())
      throw std::invalid_argument("training log: bad epoch '" + f[0] + "'");
    double* slots[] = {&r.lr, &r.l1, &r.perc, &r.adv_g, &r.adv_d, &r.total, &r.seconds};
    for (int i = 0; i < 7; ++i) {
      *slots[i] = std::stod(f[std::size_t(i + 1)], &used);
      if (used != f[std::size_t(i + 1)].size())
        throw std::invalid_argument("training log: bad number '" + f[std::size_t(i + 1)] + "'");
    }
    rows.push_back(r);
  }
  if (!header)
    throw std::invalid_argument("training log: missing header");
  return rows;
}

std::filesystem::path periodic_checkpoint_path(const std::filesystem::path& final_path, int epoch) {
  char tag[32];
  std::snprintf(tag, sizeof tag, ".e%05d", epoch);
  auto p = final_path;
  p.replace_filename(final_path.stem().string() + tag + final_path.extension().string());
  return p;
}

namespace {

class LogWriter {
 public:
  LogWriter(const TrainOptions& options, const std::string& procedure, int iterations)
      : options_(options), start_(std::chrono::steady_clock::now()) {
    if (options.log.empty())
      return;
    if (options.log.has_parent_path())
      std::filesystem::create_directories(options.log.parent_path());
    out_.open(options.log, std::ios::binary | std::ios::trunc);
    if (!out_)
      throw std::runtime_error("cannot write training log " + options.log.string());
    out_ << "# rbsr " << procedure << " config=" << (options.config_hash.empty() ? "-" : options.config_hash)
         << " iterations_per_epoch=" << iterations << "\n"
         << kTrainLogHeader << "\n";
    out_.flush();
  }

  void write(TrainLogRow& row, TrainResult& result) {
    const auto now = std::chrono::steady_clock::now();
    row.seconds = options_.deterministic ? 0.0 : std::chrono::duration<double>(now - start_).count();
    start_ = now;
    result.log.push_back(row);
    if (out_.is_open()) {
      out_ << format_log_row(row) << "\n";
      out_.flush();
    }
    if (options_.on_epoch)
      options_.on_epoch(row);
  }

 private:
  const TrainOptions& options_;
  std::ofstream out_;
  std::chrono::steady_clock::time_point start_;
};

template <class... Models>
void save_models(const std::filesystem::path& path, const Models&... models) {
  std::vector<nn::NamedTensor> tensors;
  (
      [&] {
        auto t = models.export_tensors();
        tensors.insert(tensors.end(), t.begin(), t.end());
      }(),
      ...);
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  nn::checkpoint_write(path, tensors);
}

void check_schedule(const TrainSchedule& s, const Dataset& data) {
  if (s.phase1_epochs < 0 || s.phase2_epochs < 0)
    throw std::invalid_argument("epoch counts must be >= 0");
  if (s.batch < 1 || s.crop < 1)
    throw std::invalid_argument("batch and crop must be >= 1");
  lr_at_epoch(0, s);
  validate_dataset(data);
  if (data.pairs.empty())
    throw std::invalid_argument("training dataset is empty");
  for (const auto& p : data.pairs) require_crop(p, s.crop);
}

}  // namespace

TrainResult train_upscaler(Model<float>& model, const Dataset& data, const TrainSchedule& schedule,
                           const TrainOptions& options) {
  check_schedule(schedule, data);
  const Shape4 out = model.output_shape(Shape4{1, 3, schedule.crop, schedule.crop});
  if (out.h != schedule.crop * data.target_scale || out.w != schedule.crop * data.target_scale)
    throw std::invalid_argument("model scale does not match the dataset's target scale " +
                                std::to_string(data.target_scale));

  TrainResult result;
  result.iterations_per_epoch = iterations_per_epoch(data.pairs.size(), schedule.batch);
  LogWriter log(options, "train-" + model.role, result.iterations_per_epoch);
  std::mt19937_64 rng(schedule.seed);

  const int epochs = schedule.phase1_epochs;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    nn::AdamConfig adam;
    adam.lr = lr_at_epoch(epoch, schedule);
    double l1_sum = 0.0;
    for (int it = 0; it < result.iterations_per_epoch; ++it) {
      const Batch b = sample_batch(data, schedule.crop, schedule.batch, rng);
      ForwardTrace<float> trace;
      const Tensor4<float> pred = model.forward(b.inputs, &trace);
      const LossValue<float> l1 = l1_loss(pred, b.targets);
      model.zero_grad();
      model.backward(trace, l1.grad);
      adam_update(model, adam);
      l1_sum += l1.value;
    }
    TrainLogRow row;
    row.epoch = epoch;
    row.lr = adam.lr;
    row.l1 = l1_sum / result.iterations_per_epoch;
    row.total = row.l1;
    log.write(row, result);
    if (schedule.checkpoint_every > 0 && !options.checkpoint.empty() && (epoch + 1) % schedule.checkpoint_every == 0 &&
        epoch + 1 < epochs)
      save_models(periodic_checkpoint_path(options.checkpoint, epoch + 1), model);
  }
  if (!options.checkpoint.empty())
    save_models(options.checkpoint, model);
  return result;
}

TrainResult train_lookalike(Model<float>& gen, Model<float>& disc, const FeatureExtractor<float>& extractor,
                            const Dataset& data, const TrainSchedule& schedule, const TrainOptions& options) {
  check_schedule(schedule, data);
  if (data.target_scale != 1)
    throw std::invalid_argument("look-alike training needs equal-size input and target");
  std::vector<int> real_pool;
  for (std::size_t i = 0; i < data.pairs.size(); ++i)
    if (data.pairs[i].kind == PairKind::IdentityBicubic)
      real_pool.push_back(int(i));
  if (schedule.phase2_epochs > 0) {
    if (real_pool.empty())
      throw std::invalid_argument("phase 2 needs identity_bicubic entries as the discriminator's real data");
    const Shape4 d = disc.output_shape(Shape4{1, 3, schedule.crop, schedule.crop});
    if (d.c != 1 || d.h != 1 || d.w != 1)
      throw std::invalid_argument("discriminator does not map a " + std::to_string(schedule.crop) +
                                  " crop to one probability");
  }

  TrainResult result;
  result.iterations_per_epoch = iterations_per_epoch(data.pairs.size(), schedule.batch);
  LogWriter log(options, "train-lookalike", result.iterations_per_epoch);
  std::mt19937_64 rng(schedule.seed);
  const double frozen = extractor.model().checksum();
  const LossWeights& w = schedule.weights;

  const int epochs = schedule.phase1_epochs + schedule.phase2_epochs;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const bool phase2 = epoch >= schedule.phase1_epochs;
    nn::AdamConfig adam;
    adam.lr = lr_at_epoch(epoch, schedule);
    TrainLogRow row;
    for (int it = 0; it < result.iterations_per_epoch; ++it) {
      const Batch b = sample_batch(data, schedule.crop, schedule.batch, rng);
      ForwardTrace<float> trace;
      const Tensor4<float> fake = gen.forward(b.inputs, &trace);
      const LossValue<float> l1 = l1_loss(fake, b.targets);
      Tensor4<float> grad = l1.grad;
      for (auto& g : grad.vec()) g = float(w.alpha * g);
      row.l1 += l1.value;

      if (phase2) {
        const Tensor4<float> real = sample_targets(data, real_pool, schedule.crop, schedule.batch, rng);
        row.adv_d += discriminator_step(disc, real, fake, adam).loss_d;

        const LossValue<float> perc = bicubic_perceptual_loss(fake, b.targets, extractor);
        ForwardTrace<float> d_trace;
        const auto d_fake = probabilities(disc.forward(fake, &d_trace));
        const AdversarialLosses adv = adversarial_losses({}, d_fake);
        const Tensor4<float> adv_grad =
            disc.input_gradient(d_trace, output_gradient(d_trace.outputs.back().shape(), adv.g_loss_d_fake));
        for (std::size_t i = 0; i < grad.size(); ++i)
          grad[i] += float(w.beta * perc.grad[i] + w.gamma * adv_grad[i]);
        row.perc += perc.value;
        row.adv_g += adv.loss_g;
      }
      gen.zero_grad();
      gen.backward(trace, grad);
      adam_update(gen, adam);
    }
    const double n = result.iterations_per_epoch;
    row.epoch = epoch;
    row.lr = adam.lr;
    row.l1 /= n;
    row.perc /= n;
    row.adv_g /= n;
    row.adv_d /= n;
    row.total = phase2 ? total_loss(row.l1, row.perc, row.adv_g, w) : w.alpha * row.l1;
    if (extractor.model().checksum() != frozen)
      throw std::logic_error("perceptual extractor weights changed during training");
    log.write(row, result);
    if (schedule.checkpoint_every > 0 && !options.checkpoint.empty() && (epoch + 1) % schedule.checkpoint_every == 0 &&
        epoch + 1 < epochs)
      save_models(periodic_checkpoint_path(options.checkpoint, epoch + 1), gen, disc);
  }
  if (!options.checkpoint.empty())
    save_models(options.checkpoint, gen, disc);
  return result;
}

}  // namespace rbsr
