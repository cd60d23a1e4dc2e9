#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cxr/neural/tensor.hpp"

namespace cxr::neural {

enum class LayerKind { conv, maxpool, relu, flatten, fc, softmax, upconv, concat_skip, sigmoid };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t channels = 0;  ///< conv / upconv output channels
  std::size_t kernel = 0;    ///< conv / upconv / maxpool window
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t units = 0;        ///< fc output units
  std::size_t skip_source = 0;  ///< concat_skip: layer whose output is appended along channels

  static LayerSpec conv(std::size_t channels, std::size_t kernel, std::size_t stride = 1, std::size_t padding = 0) {
    return {LayerKind::conv, channels, kernel, stride, padding, 0, 0};
  }
  static LayerSpec maxpool(std::size_t kernel, std::size_t stride, std::size_t padding = 0) {
    return {LayerKind::maxpool, 0, kernel, stride, padding, 0, 0};
  }
  static LayerSpec upconv(std::size_t channels, std::size_t kernel, std::size_t stride) {
    return {LayerKind::upconv, channels, kernel, stride, 0, 0, 0};
  }
  static LayerSpec fc(std::size_t units) { return {LayerKind::fc, 0, 0, 1, 0, units, 0}; }
  static LayerSpec concat_skip(std::size_t source) { return {LayerKind::concat_skip, 0, 0, 1, 0, 0, source}; }
  static LayerSpec of(LayerKind kind) { return {kind, 0, 0, 1, 0, 0, 0}; }

  bool has_parameters() const { return kind == LayerKind::conv || kind == LayerKind::fc || kind == LayerKind::upconv; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ArchSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  /// Layer whose output encode() returns.
  std::optional<std::size_t> feature_layer_index;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// Thirteen 3x3 convolutions in blocks of 2,2,3,3,3 separated by 3x3/2 max
/// pooling, then FC 1024, FC 1024 and a 3-way softmax. Expects 224x224x3.
ArchSpec vgg16_paper();

/// Same topology as vgg16_paper at reduced width (8..64 channels, FC 128),
/// single-channel input.
ArchSpec mini();

/// Looks up "vgg16-paper" or "mini".
ArchSpec profile(std::string_view name);

/// Number of input channels a named profile expects.
std::size_t profile_channels(std::string_view name);

/// Output shape of every layer for one sample of the given shape. Throws
/// SpecError naming the first inconsistent layer.
std::vector<Shape> infer_shapes(const ArchSpec& arch, const Shape& input_shape);

/// One row per conv, maxpool, flatten and fc layer, each with the output shape
/// after its trailing activation. Mirrors the layer table the profiles were
/// written from.
struct LayerRow {
  std::size_t first_layer;
  std::size_t last_layer;
  LayerKind kind;
  Shape shape;
};
std::vector<LayerRow> summarize_rows(const ArchSpec& arch, const std::vector<Shape>& shapes);

}  // namespace cxr::neural
