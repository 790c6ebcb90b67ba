#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbsr/nn/checkpoint.hpp"
#include "rbsr/nn/layers.hpp"
#include "rbsr/nn/parameter.hpp"
#include "rbsr/nn/tensor.hpp"

namespace rbsr {

using nn::Shape4;
using nn::Tensor4;

enum class LayerKind { Conv, Relu, Sigmoid, Dense, PixelShuffle, Identity };
enum class Combine { Add, Concat };

struct LayerDesc {
  LayerKind kind = LayerKind::Identity;
  std::string name;
  int stride = 1;
  int pad = 0;
  int factor = 1;   ///< pixel shuffle factor
  int weight = -1;  ///< index into params
  int bias = -1;
};

/// After layer `to` runs, its output is combined with the output of layer
/// `from` (-1 denotes the model input). Concat places `to`'s channels first.
struct SkipLink {
  int from = -1;
  int to = 0;
  Combine combine = Combine::Add;
};

/// Activations recorded by a forward pass, consumed by backward.
template <class T>
struct ForwardTrace {
  Tensor4<T> input;
  std::vector<Tensor4<T>> outputs;  ///< post-combine output of each executed layer
};

template <class T>
class Model {
 public:
  std::string role;  ///< parameter name prefix: gen, sr, disc, e2e
  std::vector<LayerDesc> layers;
  std::vector<SkipLink> skips;
  std::vector<nn::Parameter<T>> params;
  /// Layer index whose output is the k-th residual block's output (k from 1).
  std::vector<int> block_outputs;

  /// Runs layers [0, stop] (the whole model when stop < 0).
  Tensor4<T> forward(const Tensor4<T>& x, ForwardTrace<T>* trace = nullptr, int stop = -1) const;

  /// Backpropagates dy from the last traced layer, accumulating parameter
  /// gradients. Returns the input gradient.
  Tensor4<T> backward(const ForwardTrace<T>& trace, const Tensor4<T>& dy);

  /// Input gradient only; parameters are untouched.
  Tensor4<T> input_gradient(const ForwardTrace<T>& trace, const Tensor4<T>& dy) const;

  Shape4 output_shape(const Shape4& input, int stop = -1) const;

  std::size_t parameter_count() const;
  void zero_grad();
  nn::Parameter<T>* find(const std::string& name);
  const nn::Parameter<T>* find(const std::string& name) const;

  /// Sum of all parameter values, for change detection.
  double checksum() const;

  template <class U>
  Model<U> cast() const;

  std::vector<nn::NamedTensor> export_tensors() const;
  /// Loads values by name; every parameter must be present with matching dims.
  void load_tensors(std::span<const nn::NamedTensor> tensors);
  /// Copies values from `other` matching by name suffix after the role prefix.
  void copy_values_from(const Model& other);

  int residual_blocks() const { return int(block_outputs.size()); }

  /// Validates parameter references and skip links.
  void validate() const;

 private:
  Tensor4<T> backward_impl(const ForwardTrace<T>& trace, const Tensor4<T>& dy, bool param_grads);
};

using ModelGraph = Model<float>;

struct GeneratorConfig {
  int n_res_blocks = 8;
  int channels = 64;
};

struct SRConfig {
  int n_res_blocks = 16;
  int channels = 64;
  int scale = 4;
};

struct DiscriminatorConfig {
  int base_channels = 64;
  int n_stages = 4;
  int dense_width = 1024;
  int input_size = 128;  ///< square training crop the dense layer is sized for
};

template <class T = float>
Model<T> build_lookalike_generator(const GeneratorConfig& config, std::uint64_t seed = 1);

template <class T = float>
Model<T> build_sr_generator(const SRConfig& config, std::uint64_t seed = 2, const std::string& role = "sr");

template <class T = float>
Model<T> build_discriminator(const DiscriminatorConfig& config, std::uint64_t seed = 3);

/// SR topology with 24 residual blocks by default, parameters prefixed "e2e".
template <class T = float>
Model<T> build_e2e_baseline(SRConfig config = {24, 64, 4}, std::uint64_t seed = 4);

/// Rebuilds a model from checkpoint tensors, inferring its configuration
/// from parameter names and shapes. `role` selects the prefix.
ModelGraph model_from_tensors(std::span<const nn::NamedTensor> tensors, const std::string& role);

GeneratorConfig infer_generator_config(std::span<const nn::NamedTensor> tensors);
SRConfig infer_sr_config(std::span<const nn::NamedTensor> tensors, const std::string& role);
DiscriminatorConfig infer_discriminator_config(std::span<const nn::NamedTensor> tensors);

/// Whole-model inference on a single image.
ImageTensor run_model(const ModelGraph& model, const ImageTensor& image);

}  // namespace rbsr
