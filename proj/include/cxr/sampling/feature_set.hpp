#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cxr/matrix.hpp"

namespace cxr::sampling {

/// Where a synthetic row came from: row = base + gap * (neighbor - base).
/// All three indices refer to rows of the same FeatureSet.
struct Generator {
  std::size_t row = 0;
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double gap = 0.0;

  friend bool operator==(const Generator&, const Generator&) = default;
};

struct FeatureSet {
  Matrix<float> features;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> class_names;
  /// One identifier per row, or empty. Synthetic rows carry "".
  std::vector<std::string> ids;
  std::vector<Generator> generators;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
  std::vector<std::size_t> class_counts() const;
  std::vector<std::size_t> labels_as_indices() const { return {labels.begin(), labels.end()}; }

  /// Throws ArgumentError when labels, ids or generators are inconsistent.
  void validate() const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Rows `rows` of `fs` in that order; generators are kept only when both
/// their base and neighbor are selected, re-indexed to the subset.
FeatureSet subset(const FeatureSet& fs, std::span<const std::size_t> rows);

/// Feature file, version 1:
///
///   "CXRFEATS"          8 bytes
///   format version      u32 LE
///   header length N     u64 LE
///   header              N bytes of JSON: n, d, class_names, ids, provenance,
///                       generator_count
///   features            n*d f32 LE, row-major
///   labels              n bytes
///   generators          generator_count * (u64 row, u64 base, u64 neighbor, f64 gap)
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

std::vector<std::uint8_t> serialize_features(const FeatureSet& fs);
FeatureSet deserialize_features(std::span<const std::uint8_t> bytes);
void save_features(const std::filesystem::path& path, const FeatureSet& fs);
FeatureSet load_features(const std::filesystem::path& path);

}  // namespace cxr::sampling
