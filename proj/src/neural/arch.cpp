#include "cxr/neural/arch.hpp"

#include <array>
#include <utility>

namespace cxr::neural {

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::conv, "conv"},
    {LayerKind::maxpool, "maxpool"},
    {LayerKind::relu, "relu"},
    {LayerKind::flatten, "flatten"},
    {LayerKind::fc, "fc"},
    {LayerKind::softmax, "softmax"},
    {LayerKind::upconv, "upconv"},
    {LayerKind::concat_skip, "concat_skip"},
    {LayerKind::sigmoid, "sigmoid"},
}};

ArchSpec vgg_topology(std::string name, const std::array<std::size_t, 5>& widths, std::size_t fc_units) {
  ArchSpec arch;
  arch.name = std::move(name);
  constexpr std::array<std::size_t, 5> convs_per_block{2, 2, 3, 3, 3};
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t i = 0; i < convs_per_block[b]; ++i) {
      arch.layers.push_back(LayerSpec::conv(widths[b], 3, 1, 1));
      arch.layers.push_back(LayerSpec::of(LayerKind::relu));
    }
    arch.layers.push_back(LayerSpec::maxpool(3, 2, 1));
  }
  arch.layers.push_back(LayerSpec::of(LayerKind::flatten));
  arch.layers.push_back(LayerSpec::fc(fc_units));
  arch.layers.push_back(LayerSpec::of(LayerKind::relu));
  arch.layers.push_back(LayerSpec::fc(fc_units));
  arch.layers.push_back(LayerSpec::of(LayerKind::relu));
  arch.feature_layer_index = arch.layers.size() - 1;
  arch.layers.push_back(LayerSpec::fc(3));
  arch.layers.push_back(LayerSpec::of(LayerKind::softmax));
  return arch;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ArgumentError("unknown layer kind '" + std::string(name) + "'");
}

ArchSpec vgg16_paper() { return vgg_topology("vgg16-paper", {64, 128, 256, 512, 512}, 1024); }

ArchSpec mini() { return vgg_topology("mini", {8, 16, 32, 64, 64}, 128); }

ArchSpec profile(std::string_view name) {
  if (name == "vgg16-paper") return vgg16_paper();
  if (name == "mini") return mini();
  throw ArgumentError("unknown architecture profile '" + std::string(name) + "'");
}

std::size_t profile_channels(std::string_view name) {
  if (name == "vgg16-paper") return 3;
  if (name == "mini") return 1;
  throw ArgumentError("unknown architecture profile '" + std::string(name) + "'");
}

std::vector<Shape> infer_shapes(const ArchSpec& arch, const Shape& input_shape) {
  std::vector<Shape> shapes;
  shapes.reserve(arch.layers.size());
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    const Shape& in = i == 0 ? input_shape : shapes[i - 1];
    auto need_spatial = [&] {
      if (in.size() != 3) throw SpecError(std::string(to_string(l.kind)) + " needs a CxHxW input, got " + to_string(in), i);
    };
    switch (l.kind) {
      case LayerKind::conv:
      case LayerKind::maxpool: {
        need_spatial();
        if (l.kernel == 0 || l.stride == 0) throw SpecError("kernel and stride must be >= 1", i);
        if (l.kind == LayerKind::conv && l.channels == 0) throw SpecError("conv needs >= 1 output channel", i);
        if (l.kind == LayerKind::maxpool && l.padding >= l.kernel) throw SpecError("maxpool padding must be < kernel", i);
        if (in[1] + 2 * l.padding < l.kernel || in[2] + 2 * l.padding < l.kernel)
          throw SpecError("window " + std::to_string(l.kernel) + " exceeds padded input " + to_string(in), i);
        const std::size_t h = (in[1] + 2 * l.padding - l.kernel) / l.stride + 1;
        const std::size_t w = (in[2] + 2 * l.padding - l.kernel) / l.stride + 1;
        shapes.push_back({l.kind == LayerKind::conv ? l.channels : in[0], h, w});
        break;
      }
      case LayerKind::upconv: {
        need_spatial();
        if (l.kernel == 0 || l.stride == 0 || l.channels == 0) throw SpecError("upconv needs kernel, stride, channels >= 1", i);
        shapes.push_back({l.channels, (in[1] - 1) * l.stride + l.kernel, (in[2] - 1) * l.stride + l.kernel});
        break;
      }
      case LayerKind::concat_skip: {
        need_spatial();
        if (l.skip_source >= i) throw SpecError("skip source must precede the concatenation", i);
        const Shape& skip = shapes[l.skip_source];
        if (skip.size() != 3 || skip[1] != in[1] || skip[2] != in[2])
          throw SpecError("skip source " + to_string(skip) + " does not match input " + to_string(in), i);
        shapes.push_back({in[0] + skip[0], in[1], in[2]});
        break;
      }
      case LayerKind::flatten:
        shapes.push_back({element_count(in)});
        break;
      case LayerKind::fc:
        if (in.size() != 1) throw SpecError("fc needs a flat input, got " + to_string(in), i);
        if (l.units == 0) throw SpecError("fc needs >= 1 unit", i);
        shapes.push_back({l.units});
        break;
      case LayerKind::softmax:
        if (in.size() != 1) throw SpecError("softmax needs a flat input", i);
        shapes.push_back(in);
        break;
      case LayerKind::relu:
      case LayerKind::sigmoid:
        shapes.push_back(in);
        break;
    }
  }
  if (arch.feature_layer_index && *arch.feature_layer_index >= arch.layers.size())
    throw SpecError("feature layer index out of range", *arch.feature_layer_index);
  return shapes;
}

std::vector<LayerRow> summarize_rows(const ArchSpec& arch, const std::vector<Shape>& shapes) {
  std::vector<LayerRow> rows;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerKind kind = arch.layers[i].kind;
    const bool activation = kind == LayerKind::relu || kind == LayerKind::sigmoid || kind == LayerKind::softmax;
    if (activation && !rows.empty() && rows.back().last_layer + 1 == i) {
      rows.back().last_layer = i;
      rows.back().shape = shapes[i];
      continue;
    }
    rows.push_back({i, i, kind, shapes[i]});
  }
  return rows;
}

}  // namespace cxr::neural
