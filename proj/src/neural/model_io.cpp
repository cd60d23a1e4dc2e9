#include "cxr/neural/model_io.hpp"

#include "cxr/binary_io.hpp"

namespace cxr::neural {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "CXRMODEL";

struct Header {
  json doc;
  std::size_t payload_offset;
};

Header read_header(ByteReader& r) {
  if (r.remaining() < kMagic.size() || r.text(kMagic.size()) != kMagic) throw FormatError("not a model container", 0);
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(version), kMagic.size());
  const std::uint64_t length = r.u64();
  const std::size_t at = r.offset();
  json doc;
  try {
    doc = json::parse(r.text(length));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model header is not valid JSON: ") + e.what(), at);
  }
  return {std::move(doc), r.offset()};
}

void read_blocks(ByteReader& r, const json& blocks, Network<float>& net) {
  auto& params = net.parameters();
  if (!blocks.is_array() || blocks.size() != params.size())
    throw FormatError("model block count does not match the architecture", r.offset());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Shape shape = blocks[p].at("shape").get<Shape>();
    if (shape != params[p].shape() || blocks[p].at("layer").get<std::size_t>() != net.parameter_info()[p].layer)
      throw FormatError("model block " + std::to_string(p) + " has shape " + to_string(shape) + ", expected " +
                            to_string(params[p].shape()),
                        r.offset());
    for (auto& v : params[p].values()) v = r.f32();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after parameter blocks", r.offset());
}

}  // namespace

json arch_to_json(const ArchSpec& arch) {
  json layers = json::array();
  for (const auto& l : arch.layers) {
    json j{{"kind", std::string(to_string(l.kind))}};
    switch (l.kind) {
      case LayerKind::conv:
        j["channels"] = l.channels;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["padding"] = l.padding;
        break;
      case LayerKind::upconv:
        j["channels"] = l.channels;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        break;
      case LayerKind::maxpool:
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["padding"] = l.padding;
        break;
      case LayerKind::fc:
        j["units"] = l.units;
        break;
      case LayerKind::concat_skip:
        j["skip_source"] = l.skip_source;
        break;
      default:
        break;
    }
    layers.push_back(std::move(j));
  }
  json out{{"name", arch.name}, {"layers", std::move(layers)}};
  out["feature_layer_index"] = arch.feature_layer_index ? json(*arch.feature_layer_index) : json(nullptr);
  return out;
}

ArchSpec arch_from_json(const json& j) {
  ArchSpec arch;
  arch.name = j.at("name").get<std::string>();
  for (const auto& lj : j.at("layers")) {
    LayerSpec l = LayerSpec::of(parse_layer_kind(lj.at("kind").get<std::string>()));
    l.channels = lj.value("channels", std::size_t{0});
    l.kernel = lj.value("kernel", std::size_t{0});
    l.stride = lj.value("stride", std::size_t{1});
    l.padding = lj.value("padding", std::size_t{0});
    l.units = lj.value("units", std::size_t{0});
    l.skip_source = lj.value("skip_source", std::size_t{0});
    arch.layers.push_back(l);
  }
  if (j.contains("feature_layer_index") && !j["feature_layer_index"].is_null())
    arch.feature_layer_index = j["feature_layer_index"].get<std::size_t>();
  return arch;
}

std::vector<std::uint8_t> serialize_model(const Network<float>& net, const json& provenance) {
  json blocks = json::array();
  for (std::size_t p = 0; p < net.parameters().size(); ++p)
    blocks.push_back({{"layer", net.parameter_info()[p].layer},
                      {"name", net.parameter_info()[p].name},
                      {"shape", net.parameters()[p].shape()}});
  const json header{{"format", "cxr-model"},
                    {"version", kModelFormatVersion},
                    {"arch", arch_to_json(net.arch())},
                    {"input_shape", net.input_shape()},
                    {"seed", net.seed()},
                    {"provenance", provenance},
                    {"blocks", std::move(blocks)}};
  const std::string text = header.dump();
  ByteWriter w;
  w.text(kMagic);
  w.u32(kModelFormatVersion);
  w.u64(text.size());
  w.text(text);
  for (const auto& p : net.parameters())
    for (float v : p.values()) w.f32(v);
  return w.release();
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Header h = read_header(r);
  LoadedModel out;
  try {
    const ArchSpec arch = arch_from_json(h.doc.at("arch"));
    out.network = Network<float>::build(arch, h.doc.at("input_shape").get<Shape>(), h.doc.at("seed").get<std::uint64_t>());
    out.provenance = h.doc.value("provenance", json::object());
    read_blocks(r, h.doc.at("blocks"), out.network);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid model header: ") + e.what(), h.payload_offset);
  }
  return out;
}

void save_model(const std::filesystem::path& path, const Network<float>& net, const json& provenance) {
  write_file(path, serialize_model(net, provenance));
}

LoadedModel load_model(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_model(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail, e.offset);
  }
}

void import_parameters(Network<float>& net, std::span<const std::uint8_t> container) {
  ByteReader r(container);
  const Header h = read_header(r);
  Network<float> staged = net;
  try {
    read_blocks(r, h.doc.at("blocks"), staged);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid model header: ") + e.what(), h.payload_offset);
  }
  net.parameters() = std::move(staged.parameters());
  net.velocity().clear();
  net.mark_modified();
}

}  // namespace cxr::neural
