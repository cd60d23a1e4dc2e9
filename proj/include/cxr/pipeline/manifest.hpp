#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cxr::pipeline {

struct ManifestEntry {
  std::string id;
  std::string path;  ///< image file, relative to the manifest's directory unless absolute
  std::string label;
  std::string patient_id;
  std::string mask;  ///< optional ground-truth lung mask (PGM, nonzero = lung)

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Manifest document, version 1:
///
///   {"format": "cxr-manifest", "version": 1,
///    "class_names": ["COVID-19", "Normal", "Pneumonia"],
///    "entries": [{"id": ..., "path": ..., "label": ..., "patient_id": ..., "mask": ...}]}
///
/// "id" defaults to the file stem of "path"; "patient_id" and "mask" may be
/// omitted.
struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  ///< not serialized

  std::size_t class_index(const std::string& label) const;
  std::vector<std::size_t> labels() const;
  std::vector<std::size_t> counts() const;
  std::filesystem::path resolve(const std::string& relative) const;
  std::filesystem::path image_path(std::size_t i) const { return resolve(entries[i].path); }

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.class_names == b.class_names && a.entries == b.entries;
  }
};

/// Validates a manifest document. Duplicate paths or ids, unknown labels and
/// (when check_files) missing files are all collected into one
/// ValidationError. An empty entry list is an error.
DatasetManifest ingest_manifest(const nlohmann::json& document, const std::filesystem::path& base_dir,
                                bool check_files = true);
DatasetManifest load_manifest(const std::filesystem::path& path, bool check_files = true);
nlohmann::json manifest_to_json(const DatasetManifest& m);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

struct Fractions {
  double train = 0.6;
  double val = 0.1;
  double test = 0.3;
};

struct Splits {
  DatasetManifest train, val, test;
  std::vector<std::string> warnings;
};

/// Per-class split after a seeded shuffle: floor(n * val) to validation,
/// floor(n * test) to test and the remainder to train. Classes too small to
/// reach every split are reported in `warnings`.
Splits split_dataset(const DatasetManifest& m, const Fractions& fractions, std::uint64_t seed);

}  // namespace cxr::pipeline
