#include "json.hpp"

#include "cxr/binary_io.hpp"
#include "cxr/svm/svm.hpp"

namespace cxr::svm {

using nlohmann::json;

namespace {
constexpr std::string_view kMagic = "CXRSVMMD";
}

std::vector<std::uint8_t> serialize_svm(const SvmMultiModel& m) {
  json pairs = json::array();
  for (const auto& p : m.pairs)
    pairs.push_back({{"negative", p.negative},
                     {"positive", p.positive},
                     {"support_count", p.model.coefficients.size()},
                     {"bias", p.model.bias}});
  const json header{{"format", "cxr-svm"},
                    {"version", kSvmFormatVersion},
                    {"class_names", m.class_names},
                    {"C", m.params.C},
                    {"gamma", m.params.gamma},
                    {"tol", m.params.tol},
                    {"max_passes", m.params.max_passes},
                    {"mean", m.standardizer.mean},
                    {"scale", m.standardizer.scale},
                    {"pairs", std::move(pairs)}};
  const std::string text = header.dump();
  ByteWriter w;
  w.text(kMagic);
  w.u32(kSvmFormatVersion);
  w.u64(text.size());
  w.text(text);
  for (const auto& p : m.pairs) {
    for (double v : p.model.support_vectors.values) w.f64(v);
    for (double v : p.model.coefficients) w.f64(v);
  }
  return w.release();
}

SvmMultiModel deserialize_svm(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.text(kMagic.size()) != kMagic) throw FormatError("not an SVM model file", 0);
  const auto version = r.u32();
  if (version != kSvmFormatVersion) throw FormatError("unsupported SVM format version " + std::to_string(version), kMagic.size());
  const auto length = r.u64();
  const std::size_t header_at = r.offset();
  SvmMultiModel m;
  std::vector<std::size_t> support_counts;
  try {
    const json h = json::parse(r.text(length));
    m.class_names = h.at("class_names").get<std::vector<std::string>>();
    m.params.C = h.at("C").get<double>();
    m.params.gamma = h.at("gamma").get<double>();
    m.params.tol = h.at("tol").get<double>();
    m.params.max_passes = h.at("max_passes").get<std::size_t>();
    m.standardizer.mean = h.at("mean").get<std::vector<double>>();
    m.standardizer.scale = h.at("scale").get<std::vector<double>>();
    for (const auto& p : h.at("pairs")) {
      PairModel pm;
      pm.negative = p.at("negative").get<std::size_t>();
      pm.positive = p.at("positive").get<std::size_t>();
      pm.model.bias = p.at("bias").get<double>();
      pm.model.gamma = m.params.gamma;
      pm.model.C = m.params.C;
      support_counts.push_back(p.at("support_count").get<std::size_t>());
      m.pairs.push_back(std::move(pm));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid SVM header: ") + e.what(), header_at);
  }
  const std::size_t d = m.standardizer.mean.size();
  if (m.standardizer.scale.size() != d) throw FormatError("scaling vectors differ in length", header_at);
  for (std::size_t p = 0; p < m.pairs.size(); ++p) {
    auto& pm = m.pairs[p];
    if (pm.negative >= pm.positive || pm.positive >= m.class_names.size())
      throw FormatError("pair " + std::to_string(p) + " references invalid classes", header_at);
    const std::size_t n = support_counts[p];
    if (n > r.remaining() / 8) throw FormatError("unexpected end of data", bytes.size());
    pm.model.support_vectors = Matrix<double>(n, d);
    for (auto& v : pm.model.support_vectors.values) v = r.f64();
    pm.model.coefficients.resize(n);
    for (auto& v : pm.model.coefficients) v = r.f64();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after SVM payload", r.offset());
  return m;
}

void save_svm(const std::filesystem::path& path, const SvmMultiModel& m) { write_file(path, serialize_svm(m)); }

SvmMultiModel load_svm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_svm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail, e.offset);
  }
}

}  // namespace cxr::svm
