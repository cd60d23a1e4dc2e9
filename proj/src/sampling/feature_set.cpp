#include "cxr/sampling/feature_set.hpp"

#include <unordered_map>

#include "cxr/binary_io.hpp"

namespace cxr::sampling {

using nlohmann::json;

namespace {
constexpr std::string_view kMagic = "CXRFEATS";
}

std::vector<std::size_t> FeatureSet::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (auto l : labels) ++counts.at(l);
  return counts;
}

void FeatureSet::validate() const {
  if (labels.size() != features.rows) throw ArgumentError("one label per feature row required");
  if (features.values.size() != features.rows * features.cols) throw ArgumentError("feature matrix is ragged");
  if (class_names.empty() || class_names.size() > 256) throw ArgumentError("feature set needs 1..256 class names");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= class_names.size())
      throw ArgumentError("row " + std::to_string(i) + " has label " + std::to_string(labels[i]) + " outside the class list");
  if (!ids.empty() && ids.size() != features.rows) throw ArgumentError("ids must be empty or one per row");
  for (const auto& g : generators)
    if (g.row >= size() || g.base >= size() || g.neighbor >= size())
      throw ArgumentError("generator references a row outside the feature set");
}

FeatureSet subset(const FeatureSet& fs, std::span<const std::size_t> rows) {
  FeatureSet out;
  out.features = Matrix<float>(0, fs.dim());
  out.class_names = fs.class_names;
  out.provenance = fs.provenance;
  std::unordered_map<std::size_t, std::size_t> position;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= fs.size()) throw ArgumentError("subset row out of range");
    out.features.append_row(fs.features.row(r));
    out.labels.push_back(fs.labels[r]);
    if (!fs.ids.empty()) out.ids.push_back(fs.ids[r]);
    position.emplace(r, i);
  }
  for (const auto& g : fs.generators) {
    const auto row = position.find(g.row), base = position.find(g.base), nb = position.find(g.neighbor);
    if (row != position.end() && base != position.end() && nb != position.end())
      out.generators.push_back({row->second, base->second, nb->second, g.gap});
  }
  return out;
}

std::vector<std::uint8_t> serialize_features(const FeatureSet& fs) {
  fs.validate();
  const json header{{"format", "cxr-features"},
                    {"version", kFeatureFormatVersion},
                    {"n", fs.size()},
                    {"d", fs.dim()},
                    {"class_names", fs.class_names},
                    {"ids", fs.ids},
                    {"provenance", fs.provenance},
                    {"generator_count", fs.generators.size()}};
  const std::string text = header.dump();
  ByteWriter w;
  w.text(kMagic);
  w.u32(kFeatureFormatVersion);
  w.u64(text.size());
  w.text(text);
  for (float v : fs.features.values) w.f32(v);
  for (auto l : fs.labels) w.u8(l);
  for (const auto& g : fs.generators) {
    w.u64(g.row);
    w.u64(g.base);
    w.u64(g.neighbor);
    w.f64(g.gap);
  }
  return w.release();
}

FeatureSet deserialize_features(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.text(kMagic.size()) != kMagic) throw FormatError("not a feature file", 0);
  const auto version = r.u32();
  if (version != kFeatureFormatVersion)
    throw FormatError("unsupported feature format version " + std::to_string(version), kMagic.size());
  const auto length = r.u64();
  const std::size_t header_at = r.offset();
  FeatureSet fs;
  std::size_t n = 0, d = 0, generators = 0;
  try {
    const json h = json::parse(r.text(length));
    n = h.at("n").get<std::size_t>();
    d = h.at("d").get<std::size_t>();
    fs.class_names = h.at("class_names").get<std::vector<std::string>>();
    fs.ids = h.value("ids", std::vector<std::string>{});
    fs.provenance = h.value("provenance", json::object());
    generators = h.value("generator_count", std::size_t{0});
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid feature header: ") + e.what(), header_at);
  }
  if (d != 0 && n > r.remaining() / (4 * d)) throw FormatError("feature payload shorter than n*d", r.offset());
  fs.features = Matrix<float>(n, d);
  for (auto& v : fs.features.values) v = r.f32();
  const std::size_t labels_at = r.offset();
  fs.labels.resize(n);
  for (auto& l : fs.labels) l = r.u8();
  for (std::size_t g = 0; g < generators; ++g) {
    Generator gen;
    gen.row = r.u64();
    gen.base = r.u64();
    gen.neighbor = r.u64();
    gen.gap = r.f64();
    fs.generators.push_back(gen);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after feature payload", r.offset());
  try {
    fs.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(e.what(), labels_at);
  }
  return fs;
}

void save_features(const std::filesystem::path& path, const FeatureSet& fs) { write_file(path, serialize_features(fs)); }

FeatureSet load_features(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_features(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail, e.offset);
  }
}

}  // namespace cxr::sampling
