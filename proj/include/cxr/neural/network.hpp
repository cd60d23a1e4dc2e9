#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cxr/neural/arch.hpp"
#include "cxr/neural/tensor.hpp"

namespace cxr::neural {

/// A parameter tensor together with the layer that owns it.
struct ParameterInfo {
  std::size_t layer;
  std::string name;  ///< "weight" or "bias"
};

/// Trainable network: layer specs, per-layer shapes, parameters and SGD
/// velocity. Copyable; a copy is an independent network.
template <class T>
class Network {
 public:
  Network() = default;

  /// He-scaled normal weights (variance 2/fan_in), zero biases.
  static Network build(const ArchSpec& arch, const Shape& input_shape, std::uint64_t seed);

  const ArchSpec& arch() const { return arch_; }
  const Shape& input_shape() const { return input_shape_; }
  /// Per-sample output shape of each layer.
  const std::vector<Shape>& output_shapes() const { return shapes_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<Tensor<T>>& parameters() { return params_; }
  const std::vector<Tensor<T>>& parameters() const { return params_; }
  const std::vector<ParameterInfo>& parameter_info() const { return param_info_; }
  /// Indices into parameters() for the weight and bias of a layer, if any.
  std::optional<std::pair<std::size_t, std::size_t>> layer_parameters(std::size_t layer) const;
  std::size_t parameter_count() const;

  /// Velocity buffers, allocated on the first optimizer step.
  std::vector<Tensor<T>>& velocity() { return velocity_; }
  const std::vector<Tensor<T>>& velocity() const { return velocity_; }

  /// Index of the last layer evaluated by forward(): the terminal softmax or
  /// sigmoid is excluded because the losses fuse it.
  std::size_t logits_layer() const;

  /// Bumped whenever parameters change; forward caches record it.
  std::uint64_t version() const { return version_; }
  void mark_modified() { ++version_; }

  template <class U>
  Network<U> cast() const;

 private:
  template <class U>
  friend class Network;

  ArchSpec arch_;
  Shape input_shape_;
  std::vector<Shape> shapes_;
  std::vector<Tensor<T>> params_;
  std::vector<ParameterInfo> param_info_;
  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> layer_params_;
  std::vector<Tensor<T>> velocity_;
  std::uint64_t seed_ = 0;
  std::uint64_t version_ = 0;
};

/// Activations of one forward call, retained for backward.
template <class T>
struct ForwardPass {
  Tensor<T> input;
  std::vector<Tensor<T>> outputs;  ///< outputs[i] for layers 0..last_layer
  std::vector<std::vector<std::uint32_t>> argmax;  ///< maxpool routing per layer
  std::size_t last_layer = 0;
  std::uint64_t network_version = 0;
  const void* network = nullptr;

  const Tensor<T>& output() const { return outputs.at(last_layer); }
};

template <class T>
struct Gradients {
  std::vector<Tensor<T>> parameters;  ///< aligned with Network::parameters()
  Tensor<T> input;

  /// this += other, elementwise.
  void accumulate(const Gradients& other);
  void scale(T factor);
};

/// Runs layers 0..net.logits_layer() on a batch shaped [B, input_shape...].
template <class T>
ForwardPass<T> forward(const Network<T>& net, const Tensor<T>& batch);

/// Runs layers 0..last_layer inclusive.
template <class T>
ForwardPass<T> forward_to(const Network<T>& net, const Tensor<T>& batch, std::size_t last_layer);

/// Reverse-mode gradients of a scalar loss given dLoss/d(pass.output()).
/// Throws ContractError when the network changed since the forward call.
template <class T>
Gradients<T> backward(const Network<T>& net, const ForwardPass<T>& pass, const Tensor<T>& grad_output);

/// Full network including the terminal softmax/sigmoid.
template <class T>
Tensor<T> predict(const Network<T>& net, const Tensor<T>& batch);

/// Classic momentum: v <- momentum*v + g; theta <- theta - lr*v.
template <class T>
void sgd_momentum_step(Network<T>& net, const Gradients<T>& grads, double lr, double momentum);

/// Stacks samples into a batch tensor [B, sample_shape...].
template <class T>
Tensor<T> stack(const std::vector<const Tensor<T>*>& samples);

/// Network for a named profile ("vgg16-paper", "mini") at the given input shape.
Network<float> build_network(std::string_view profile_name, const Shape& input_shape, std::uint64_t seed);

}  // namespace cxr::neural
