#include "rbsr/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace rbsr {

using nn::NamedTensor;
using nn::Parameter;

namespace {

template <class T>
void accumulate(Tensor4<T>& into, Tensor4<T>&& g) {
  if (into.empty()) {
    into = std::move(g);
    return;
  }
  nn::require_same_shape(into.shape(), g.shape(), "gradient accumulation");
  for (std::size_t i = 0; i < g.size(); ++i) into[i] += g[i];
}

template <class T>
std::span<const T> bias_span(const Model<T>& m, const LayerDesc& l) {
  if (l.bias < 0)
    return {};
  const auto& v = m.params[std::size_t(l.bias)].value;
  return {v.data(), v.size()};
}

std::string layer_error(const LayerDesc& l, const std::exception& e) {
  return "layer '" + l.name + "': " + e.what();
}

}  // namespace

template <class T>
void Model<T>::validate() const {
  std::map<std::string, int> names;
  for (const auto& p : params)
    if (!names.emplace(p.name, 0).second)
      throw std::logic_error("duplicate parameter name " + p.name);
  for (const auto& l : layers) {
    if (l.weight >= int(params.size()) || l.bias >= int(params.size()))
      throw std::logic_error("layer " + l.name + " references a missing parameter");
    if ((l.kind == LayerKind::Conv || l.kind == LayerKind::Dense) && l.weight < 0)
      throw std::logic_error("layer " + l.name + " has no weight");
  }
  std::vector<int> seen(layers.size(), 0);
  for (const auto& s : skips) {
    if (s.to < 0 || s.to >= int(layers.size()) || s.from < -1 || s.from >= s.to)
      throw std::logic_error("invalid skip link");
    if (seen[std::size_t(s.to)]++)
      throw std::logic_error("layer " + layers[std::size_t(s.to)].name + " is the target of two skip links");
  }
}

template <class T>
Tensor4<T> Model<T>::forward(const Tensor4<T>& x, ForwardTrace<T>* trace, int stop) const {
  const int last = stop < 0 ? int(layers.size()) - 1 : stop;
  if (last >= int(layers.size()))
    throw std::out_of_range("forward: stop layer out of range");

  std::vector<const SkipLink*> skip_at(layers.size(), nullptr);
  std::vector<bool> needed(layers.size(), false);
  bool input_needed = false;
  for (const auto& s : skips) {
    skip_at[std::size_t(s.to)] = &s;
    if (s.to <= last) {
      if (s.from < 0)
        input_needed = true;
      else
        needed[std::size_t(s.from)] = true;
    }
  }

  ForwardTrace<T> local;
  ForwardTrace<T>& tr = trace ? *trace : local;
  tr.outputs.assign(std::size_t(last + 1), Tensor4<T>());
  tr.input = x;

  for (int i = 0; i <= last; ++i) {
    const LayerDesc& l = layers[std::size_t(i)];
    const Tensor4<T>& in = i == 0 ? tr.input : tr.outputs[std::size_t(i - 1)];
    Tensor4<T> out;
    try {
      switch (l.kind) {
        case LayerKind::Conv:
          out = nn::conv2d(in, params[std::size_t(l.weight)].value, bias_span(*this, l), l.stride, l.pad);
          break;
        case LayerKind::Relu:
          out = nn::activation(in, nn::Activation::Relu);
          break;
        case LayerKind::Sigmoid:
          out = nn::activation(in, nn::Activation::Sigmoid);
          break;
        case LayerKind::Dense:
          out = nn::dense(in, params[std::size_t(l.weight)].value, bias_span(*this, l));
          break;
        case LayerKind::PixelShuffle:
          out = nn::pixel_shuffle(in, l.factor);
          break;
        case LayerKind::Identity:
          out = in;
          break;
      }
      if (const SkipLink* s = skip_at[std::size_t(i)]) {
        const Tensor4<T>& other = s->from < 0 ? tr.input : tr.outputs[std::size_t(s->from)];
        if (s->combine == Combine::Add) {
          nn::require_same_shape(out.shape(), other.shape(), "residual add");
          for (std::size_t k = 0; k < out.size(); ++k) out[k] += other[k];
        } else {
          out = nn::concat_channels(out, other);
        }
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(layer_error(l, e));
    }
    tr.outputs[std::size_t(i)] = std::move(out);
    // Without a caller trace, drop activations nothing downstream reads.
    if (!trace && i > 0 && !needed[std::size_t(i - 1)])
      tr.outputs[std::size_t(i - 1)] = Tensor4<T>();
    if (!trace && i == 0 && !input_needed)
      tr.input = Tensor4<T>();
  }
  return tr.outputs[std::size_t(last)];
}

template <class T>
Tensor4<T> Model<T>::backward_impl(const ForwardTrace<T>& trace, const Tensor4<T>& dy, bool param_grads) {
  const int last = int(trace.outputs.size()) - 1;
  if (last < 0)
    throw std::logic_error("backward: empty trace");
  nn::require_same_shape(dy.shape(), trace.outputs[std::size_t(last)].shape(), "backward dy");

  std::vector<const SkipLink*> skip_at(layers.size(), nullptr);
  for (const auto& s : skips) skip_at[std::size_t(s.to)] = &s;

  std::vector<Tensor4<T>> grads(std::size_t(last + 1));
  Tensor4<T> grad_input;
  grads[std::size_t(last)] = dy;

  for (int i = last; i >= 0; --i) {
    const LayerDesc& l = layers[std::size_t(i)];
    Tensor4<T> g = std::move(grads[std::size_t(i)]);
    grads[std::size_t(i)] = Tensor4<T>();
    if (g.empty())
      continue;  // layer output does not reach the loss

    if (const SkipLink* s = skip_at[std::size_t(i)]) {
      Tensor4<T>& target = s->from < 0 ? grad_input : grads[std::size_t(s->from)];
      if (s->combine == Combine::Add) {
        accumulate(target, Tensor4<T>(g));
      } else {
        const int other_c = (s->from < 0 ? trace.input : trace.outputs[std::size_t(s->from)]).c();
        Tensor4<T> mine, other;
        nn::split_channels(g, g.c() - other_c, mine, other);
        accumulate(target, std::move(other));
        g = std::move(mine);
      }
    }

    const Tensor4<T>& in = i == 0 ? trace.input : trace.outputs[std::size_t(i - 1)];
    Tensor4<T> dx;
    switch (l.kind) {
      case LayerKind::Conv: {
        auto cg = nn::conv2d_grad(in, params[std::size_t(l.weight)].value, g, l.stride, l.pad, true);
        if (param_grads) {
          auto& pw = params[std::size_t(l.weight)].grad;
          for (std::size_t k = 0; k < pw.size(); ++k) pw[k] += cg.dw[k];
          if (l.bias >= 0) {
            auto& pb = params[std::size_t(l.bias)].grad;
            for (std::size_t k = 0; k < pb.size(); ++k) pb[k] += cg.db[k];
          }
        }
        dx = std::move(cg.dx);
        break;
      }
      case LayerKind::Relu:
        dx = nn::activation_grad(in, g, nn::Activation::Relu);
        break;
      case LayerKind::Sigmoid:
        dx = nn::activation_grad(in, g, nn::Activation::Sigmoid);
        break;
      case LayerKind::Dense: {
        auto dg = nn::dense_grad(in, params[std::size_t(l.weight)].value, g);
        if (param_grads) {
          auto& pw = params[std::size_t(l.weight)].grad;
          for (std::size_t k = 0; k < pw.size(); ++k) pw[k] += dg.dw[k];
          if (l.bias >= 0) {
            auto& pb = params[std::size_t(l.bias)].grad;
            for (std::size_t k = 0; k < pb.size(); ++k) pb[k] += dg.db[k];
          }
        }
        dx = std::move(dg.dx);
        break;
      }
      case LayerKind::PixelShuffle:
        dx = nn::pixel_unshuffle(g, l.factor);
        break;
      case LayerKind::Identity:
        dx = std::move(g);
        break;
    }
    accumulate(i == 0 ? grad_input : grads[std::size_t(i - 1)], std::move(dx));
  }
  if (grad_input.empty())
    grad_input = Tensor4<T>(trace.input.shape());
  return grad_input;
}

template <class T>
Tensor4<T> Model<T>::backward(const ForwardTrace<T>& trace, const Tensor4<T>& dy) {
  return backward_impl(trace, dy, true);
}

template <class T>
Tensor4<T> Model<T>::input_gradient(const ForwardTrace<T>& trace, const Tensor4<T>& dy) const {
  // backward_impl only mutates parameter gradients when asked to.
  return const_cast<Model*>(this)->backward_impl(trace, dy, false);
}

template <class T>
Shape4 Model<T>::output_shape(const Shape4& input, int stop) const {
  const int last = stop < 0 ? int(layers.size()) - 1 : stop;
  std::vector<Shape4> shapes(std::size_t(last + 1));
  std::vector<const SkipLink*> skip_at(layers.size(), nullptr);
  for (const auto& s : skips) skip_at[std::size_t(s.to)] = &s;
  for (int i = 0; i <= last; ++i) {
    const LayerDesc& l = layers[std::size_t(i)];
    Shape4 in = i == 0 ? input : shapes[std::size_t(i - 1)];
    Shape4 out = in;
    try {
      switch (l.kind) {
        case LayerKind::Conv: {
          const auto& w = params[std::size_t(l.weight)].value;
          if (in.c != w.c())
            throw std::invalid_argument("channel mismatch " + std::to_string(in.c) + " vs " + std::to_string(w.c()));
          out = {in.n, w.n(), nn::conv_output_size(in.h, w.h(), l.stride, l.pad),
                 nn::conv_output_size(in.w, w.w(), l.stride, l.pad)};
          break;
        }
        case LayerKind::Dense: {
          const auto& w = params[std::size_t(l.weight)].value;
          if (std::size_t(in.c) * in.h * in.w != std::size_t(w.c()))
            throw std::invalid_argument("dense input width mismatch");
          out = {in.n, w.n(), 1, 1};
          break;
        }
        case LayerKind::PixelShuffle:
          if (in.c % (l.factor * l.factor) != 0)
            throw std::invalid_argument("pixel shuffle channel mismatch");
          out = {in.n, in.c / (l.factor * l.factor), in.h * l.factor, in.w * l.factor};
          break;
        default:
          break;
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(layer_error(l, e));
    }
    if (const SkipLink* s = skip_at[std::size_t(i)]) {
      const Shape4 other = s->from < 0 ? input : shapes[std::size_t(s->from)];
      if (s->combine == Combine::Concat)
        out.c += other.c;
    }
    shapes[std::size_t(i)] = out;
  }
  return shapes[std::size_t(last)];
}

template <class T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

template <class T>
void Model<T>::zero_grad() {
  for (auto& p : params) p.zero_grad();
}

template <class T>
nn::Parameter<T>* Model<T>::find(const std::string& name) {
  for (auto& p : params)
    if (p.name == name)
      return &p;
  return nullptr;
}

template <class T>
const nn::Parameter<T>* Model<T>::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name)
      return &p;
  return nullptr;
}

template <class T>
double Model<T>::checksum() const {
  double s = 0.0;
  for (const auto& p : params)
    for (std::size_t i = 0; i < p.value.size(); ++i) s += double(p.value[i]) * double(1 + (i % 7));
  return s;
}

template <class T>
template <class U>
Model<U> Model<T>::cast() const {
  Model<U> out;
  out.role = role;
  out.layers = layers;
  out.skips = skips;
  out.block_outputs = block_outputs;
  for (const auto& p : params) {
    nn::Parameter<U> q(p.name, p.rank, p.value.template cast<U>());
    q.step = p.step;
    out.params.push_back(std::move(q));
  }
  return out;
}

namespace {

std::vector<std::uint32_t> logical_dims(const Shape4& s, int rank) {
  const std::uint32_t all[4] = {std::uint32_t(s.n), std::uint32_t(s.c), std::uint32_t(s.h), std::uint32_t(s.w)};
  return std::vector<std::uint32_t>(all, all + rank);
}

}  // namespace

template <class T>
std::vector<NamedTensor> Model<T>::export_tensors() const {
  std::vector<NamedTensor> out;
  for (const auto& p : params) {
    NamedTensor t;
    t.name = p.name;
    t.dims = logical_dims(p.value.shape(), p.rank);
    t.data.reserve(p.value.size());
    for (std::size_t i = 0; i < p.value.size(); ++i) t.data.push_back(float(p.value[i]));
    out.push_back(std::move(t));
  }
  return out;
}

template <class T>
void Model<T>::load_tensors(std::span<const NamedTensor> tensors) {
  for (auto& p : params) {
    const NamedTensor* t = nn::find_tensor(tensors, p.name);
    if (!t)
      throw std::runtime_error("checkpoint is missing tensor '" + p.name + "'");
    if (t->dims != logical_dims(p.value.shape(), p.rank))
      throw std::runtime_error("checkpoint tensor '" + p.name + "' has mismatched dims");
    for (std::size_t i = 0; i < t->data.size(); ++i) p.value[i] = T(t->data[i]);
  }
}

template <class T>
void Model<T>::copy_values_from(const Model& other) {
  auto suffix = [](const std::string& name) { return name.substr(name.find('.')); };
  std::map<std::string, const Parameter<T>*> by_suffix;
  for (const auto& p : other.params) by_suffix[suffix(p.name)] = &p;
  for (auto& p : params) {
    auto it = by_suffix.find(suffix(p.name));
    if (it == by_suffix.end() || !(it->second->value.shape() == p.value.shape()))
      throw std::runtime_error("copy_values_from: no matching parameter for " + p.name);
    p.value = it->second->value;
  }
}

// ---------------------------------------------------------------------------
// Builders

namespace {

/// Uniform fan-in initialisation (bound 1/sqrt(fan_in)) with a portable draw.
template <class T>
class Builder {
 public:
  Builder(std::string role, std::uint64_t seed) : rng_(seed) { model_.role = std::move(role); }

  int add_param(const std::string& name, int rank, Shape4 shape, double bound) {
    Tensor4<T> value(shape);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double u = double(rng_() >> 11) * 0x1.0p-53;
      value[i] = T((2.0 * u - 1.0) * bound);
    }
    model_.params.emplace_back(model_.role + "." + name, rank, std::move(value));
    return int(model_.params.size()) - 1;
  }

  int conv(const std::string& name, int in_c, int out_c, int stride = 1) {
    const double bound = std::sqrt(1.0 / (in_c * 9));
    LayerDesc l;
    l.kind = LayerKind::Conv;
    l.name = model_.role + "." + name;
    l.stride = stride;
    l.pad = 1;
    l.weight = add_param(name + ".w", 4, {out_c, in_c, 3, 3}, bound);
    l.bias = add_param(name + ".b", 1, {out_c, 1, 1, 1}, 0.0);
    return push(l);
  }

  int dense(const std::string& name, int in, int out) {
    const double bound = std::sqrt(1.0 / in);
    LayerDesc l;
    l.kind = LayerKind::Dense;
    l.name = model_.role + "." + name;
    l.weight = add_param(name + ".w", 2, {out, in, 1, 1}, bound);
    l.bias = add_param(name + ".b", 1, {out, 1, 1, 1}, 0.0);
    return push(l);
  }

  int simple(LayerKind kind, const std::string& name, int factor = 1) {
    LayerDesc l;
    l.kind = kind;
    l.name = model_.role + "." + name;
    l.factor = factor;
    return push(l);
  }

  void skip(int from, int to, Combine c) { model_.skips.push_back({from, to, c}); }

  void scale_weight(int layer, double factor) {
    auto& w = weight(layer);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = T(w[i] * factor);
  }

  /// Adds 1 to the centre tap linking input channel `from` to output `to`.
  void add_tap(int layer, int to, int from) { weight(layer).at(to, from, 1, 1) += T(1); }
  int last() const { return int(model_.layers.size()) - 1; }
  Model<T>& model() { return model_; }

  Model<T> finish() {
    model_.validate();
    return std::move(model_);
  }

 private:
  int push(const LayerDesc& l) {
    model_.layers.push_back(l);
    return last();
  }

  Tensor4<T>& weight(int layer) { return model_.params[std::size_t(model_.layers[std::size_t(layer)].weight)].value; }

  Model<T> model_;
  std::mt19937_64 rng_;
};

// The random part of the main path is damped and the first three channels
// carry the input straight through, so an untrained network starts close
// to identity (look-alike) or nearest-neighbour upsampling (SR).
constexpr double kPathDamping = 0.1;

template <class T>
Model<T> build_edsr_like(const SRConfig& config, std::uint64_t seed, const std::string& role) {
  if (config.n_res_blocks < 1 || config.channels < 1)
    throw std::invalid_argument("SR config: blocks and channels must be >= 1");
  if (config.scale != 4)
    throw std::invalid_argument("SR config: only scale 4 is supported");
  const int C = config.channels;
  Builder<T> b(role, seed);
  const int head = b.conv("head", 3, C);
  int block_in = head;
  for (int k = 0; k < config.n_res_blocks; ++k) {
    const std::string p = "block" + std::to_string(k);
    b.conv(p + ".conv1", C, C);
    b.simple(LayerKind::Relu, p + ".relu");
    const int out = b.conv(p + ".conv2", C, C);
    b.skip(block_in, out, Combine::Add);
    b.model().block_outputs.push_back(out);
    block_in = out;
  }
  const int body = b.conv("body", C, C);
  b.skip(head, body, Combine::Add);
  const int up0 = b.conv("up0", C, 4 * C);
  b.simple(LayerKind::PixelShuffle, "shuffle0", 2);
  const int up1 = b.conv("up1", C, 4 * C);
  b.simple(LayerKind::PixelShuffle, "shuffle1", 2);
  const int tail = b.conv("tail", C, 3);

  for (int l : {head, body, up0, up1, tail}) b.scale_weight(l, kPathDamping);
  for (int out : b.model().block_outputs) b.scale_weight(out, kPathDamping);
  for (int c = 0; c < std::min(C, 3); ++c) {
    b.add_tap(head, c, c);
    for (int phase = 0; phase < 4; ++phase) {
      b.add_tap(up0, 4 * c + phase, c);
      b.add_tap(up1, 4 * c + phase, c);
    }
    b.add_tap(tail, c, c);
  }
  return b.finish();
}

}  // namespace

template <class T>
Model<T> build_lookalike_generator(const GeneratorConfig& config, std::uint64_t seed) {
  if (config.n_res_blocks < 1 || config.channels < 1)
    throw std::invalid_argument("generator config: blocks and channels must be >= 1");
  const int C = config.channels;
  Builder<T> b("gen", seed);
  const int head_conv = b.conv("head", 3, C);
  const int head = b.simple(LayerKind::Relu, "head.relu");
  int block_in = head;
  for (int k = 0; k < config.n_res_blocks; ++k) {
    const std::string p = "block" + std::to_string(k);
    b.conv(p + ".conv1", C, C);
    b.simple(LayerKind::Relu, p + ".relu1");
    b.scale_weight(b.conv(p + ".conv2", C, C), kPathDamping);
    const int out = b.simple(LayerKind::Relu, p + ".relu2");
    b.skip(block_in, out, Combine::Add);
    b.model().block_outputs.push_back(out);
    block_in = out;
  }
  const int join = b.simple(LayerKind::Identity, "longskip");
  b.skip(head, join, Combine::Concat);
  const int tail = b.conv("tail", 2 * C, 3);

  b.scale_weight(head_conv, kPathDamping);
  b.scale_weight(tail, kPathDamping);
  for (int c = 0; c < std::min(C, 3); ++c) {
    b.add_tap(head_conv, c, c);
    b.add_tap(tail, c, C + c);  // concat puts the head features after the block output
  }
  return b.finish();
}

template <class T>
Model<T> build_sr_generator(const SRConfig& config, std::uint64_t seed, const std::string& role) {
  return build_edsr_like<T>(config, seed, role);
}

template <class T>
Model<T> build_e2e_baseline(SRConfig config, std::uint64_t seed) {
  return build_edsr_like<T>(config, seed, "e2e");
}

template <class T>
Model<T> build_discriminator(const DiscriminatorConfig& config, std::uint64_t seed) {
  if (config.base_channels < 1 || config.n_stages < 1 || config.dense_width < 1)
    throw std::invalid_argument("discriminator config: all sizes must be >= 1");
  const int reduction = 1 << config.n_stages;
  if (config.input_size < reduction || config.input_size % reduction != 0)
    throw std::invalid_argument("discriminator: input size " + std::to_string(config.input_size) +
                                " incompatible with " + std::to_string(config.n_stages) + " stride-2 stages");
  Builder<T> b("disc", seed);
  int in_c = 3, ch = config.base_channels;
  for (int s = 0; s < config.n_stages; ++s) {
    const std::string p = "s" + std::to_string(s);
    b.conv(p + ".conv1", in_c, ch, 1);
    b.simple(LayerKind::Relu, p + ".relu1");
    b.conv(p + ".conv2", ch, ch, 2);
    b.simple(LayerKind::Relu, p + ".relu2");
    in_c = ch;
    ch = std::min(ch * 2, 512);
  }
  const int side = config.input_size / reduction;
  b.dense("fc1", in_c * side * side, config.dense_width);
  b.simple(LayerKind::Relu, "fc1.relu");
  b.dense("fc2", config.dense_width, 1);
  b.simple(LayerKind::Sigmoid, "sigmoid");
  return b.finish();
}

// ---------------------------------------------------------------------------
// Reconstruction from checkpoints

namespace {

const NamedTensor& require(std::span<const NamedTensor> t, const std::string& name) {
  const NamedTensor* p = nn::find_tensor(t, name);
  if (!p)
    throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
  return *p;
}

int count_blocks(std::span<const NamedTensor> t, const std::string& prefix) {
  int k = 0;
  while (nn::find_tensor(t, prefix + ".block" + std::to_string(k) + ".conv1.w")) ++k;
  return k;
}

}  // namespace

GeneratorConfig infer_generator_config(std::span<const NamedTensor> t) {
  GeneratorConfig c;
  c.channels = int(require(t, "gen.head.w").dims.at(0));
  c.n_res_blocks = count_blocks(t, "gen");
  return c;
}

SRConfig infer_sr_config(std::span<const NamedTensor> t, const std::string& role) {
  SRConfig c;
  c.channels = int(require(t, role + ".head.w").dims.at(0));
  c.n_res_blocks = count_blocks(t, role);
  return c;
}

DiscriminatorConfig infer_discriminator_config(std::span<const NamedTensor> t) {
  DiscriminatorConfig c;
  c.base_channels = int(require(t, "disc.s0.conv1.w").dims.at(0));
  c.n_stages = 0;
  while (nn::find_tensor(t, "disc.s" + std::to_string(c.n_stages) + ".conv1.w")) ++c.n_stages;
  const auto& fc1 = require(t, "disc.fc1.w");
  c.dense_width = int(fc1.dims.at(0));
  const int last_c = int(require(t, "disc.s" + std::to_string(c.n_stages - 1) + ".conv2.w").dims.at(0));
  const int side = int(std::lround(std::sqrt(double(fc1.dims.at(1)) / last_c)));
  c.input_size = side << c.n_stages;
  return c;
}

ModelGraph model_from_tensors(std::span<const NamedTensor> tensors, const std::string& role) {
  ModelGraph m;
  if (role == "gen")
    m = build_lookalike_generator<float>(infer_generator_config(tensors));
  else if (role == "sr" || role == "e2e")
    m = build_sr_generator<float>(infer_sr_config(tensors, role), 0, role);
  else if (role == "disc")
    m = build_discriminator<float>(infer_discriminator_config(tensors));
  else
    throw std::invalid_argument("unknown model role '" + role + "'");
  m.load_tensors(tensors);
  return m;
}

ImageTensor run_model(const ModelGraph& model, const ImageTensor& image) {
  const ImageTensor* one = &image;
  const auto x = nn::batch_from_images<float>(std::span<const ImageTensor>(one, 1));
  return nn::image_from_batch(model.forward(x));
}

template class Model<float>;
template class Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;

#define RBSR_INSTANTIATE(T)                                                                     \
  template Model<T> build_lookalike_generator<T>(const GeneratorConfig&, std::uint64_t);      \
  template Model<T> build_sr_generator<T>(const SRConfig&, std::uint64_t, const std::string&); \
  template Model<T> build_discriminator<T>(const DiscriminatorConfig&, std::uint64_t);        \
  template Model<T> build_e2e_baseline<T>(SRConfig, std::uint64_t);

RBSR_INSTANTIATE(float)
RBSR_INSTANTIATE(double)

}  // namespace rbsr
