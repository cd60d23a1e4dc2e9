#include "cxr/pipeline/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "cxr/binary_io.hpp"
#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr::pipeline {

namespace fs = std::filesystem;

std::size_t DatasetManifest::class_index(const std::string& label) const {
  const auto it = std::find(class_names.begin(), class_names.end(), label);
  if (it == class_names.end()) throw ArgumentError("unknown class label '" + label + "'");
  return static_cast<std::size_t>(it - class_names.begin());
}

std::vector<std::size_t> DatasetManifest::labels() const {
  std::vector<std::size_t> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(class_index(e.label));
  return out;
}

std::vector<std::size_t> DatasetManifest::counts() const {
  std::vector<std::size_t> out(class_names.size(), 0);
  for (auto l : labels()) ++out[l];
  return out;
}

fs::path DatasetManifest::resolve(const std::string& relative) const {
  const fs::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

namespace {

const std::set<std::string> kTopKeys{"format", "version", "class_names", "entries"};
const std::set<std::string> kEntryKeys{"id", "path", "label", "patient_id", "mask"};

std::string describe(std::size_t i, const nlohmann::json& e) {
  std::string s = "entry " + std::to_string(i);
  if (e.is_object() && e.contains("path") && e["path"].is_string()) s += " (" + e["path"].get<std::string>() + ")";
  return s;
}

}  // namespace

DatasetManifest ingest_manifest(const nlohmann::json& doc, const fs::path& base_dir, bool check_files) {
  std::vector<std::string> problems;
  if (!doc.is_object()) throw ValidationError("manifest is not a JSON object", {});
  for (const auto& [key, _] : doc.items())
    if (!kTopKeys.count(key)) problems.push_back("unknown key '" + key + "'");
  if (doc.value("format", std::string("cxr-manifest")) != "cxr-manifest") problems.push_back("format must be \"cxr-manifest\"");
  if (doc.contains("version") && doc["version"] != 1) problems.push_back("unsupported version " + doc["version"].dump());
  if (!doc.contains("class_names") || !doc["class_names"].is_array() || doc["class_names"].empty())
    problems.push_back("class_names must be a nonempty array of strings");
  if (!doc.contains("entries") || !doc["entries"].is_array()) problems.push_back("entries must be an array");
  if (!problems.empty()) throw ValidationError("invalid manifest", problems);

  DatasetManifest m;
  m.base_dir = base_dir;
  for (const auto& c : doc["class_names"]) {
    if (!c.is_string()) throw ValidationError("invalid manifest", {"class_names must be strings"});
    m.class_names.push_back(c.get<std::string>());
  }
  {
    std::set<std::string> seen;
    for (const auto& c : m.class_names)
      if (!seen.insert(c).second) problems.push_back("duplicate class name '" + c + "'");
  }
  const auto& entries = doc["entries"];
  if (entries.empty()) problems.push_back("entry list is empty");

  std::set<std::string> paths, ids;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string who = describe(i, e);
    if (!e.is_object()) {
      problems.push_back(who + ": not an object");
      continue;
    }
    bool ok = true;
    for (const auto& [key, value] : e.items()) {
      if (!kEntryKeys.count(key)) {
        problems.push_back(who + ": unknown key '" + key + "'");
        ok = false;
      } else if (!value.is_string()) {
        problems.push_back(who + ": '" + key + "' must be a string");
        ok = false;
      }
    }
    if (!e.contains("path") || !e.contains("label")) {
      problems.push_back(who + ": 'path' and 'label' are required");
      ok = false;
    }
    if (!ok) continue;
    ManifestEntry entry;
    entry.path = e["path"].get<std::string>();
    entry.label = e["label"].get<std::string>();
    entry.patient_id = e.value("patient_id", std::string());
    entry.mask = e.value("mask", std::string());
    entry.id = e.value("id", fs::path(entry.path).stem().string());
    if (std::find(m.class_names.begin(), m.class_names.end(), entry.label) == m.class_names.end())
      problems.push_back(who + ": unknown label '" + entry.label + "'");
    if (!paths.insert(entry.path).second) problems.push_back(who + ": duplicate path");
    if (!ids.insert(entry.id).second) problems.push_back(who + ": duplicate id '" + entry.id + "'");
    if (check_files) {
      if (!fs::is_regular_file(m.resolve(entry.path))) problems.push_back(who + ": image file not found");
      if (!entry.mask.empty() && !fs::is_regular_file(m.resolve(entry.mask))) problems.push_back(who + ": mask file not found");
    }
    m.entries.push_back(std::move(entry));
  }
  if (!problems.empty()) throw ValidationError("invalid manifest", problems);
  return m;
}

DatasetManifest load_manifest(const fs::path& path, bool check_files) {
  const auto bytes = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), e.byte);
  }
  return ingest_manifest(doc, path.parent_path(), check_files);
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json j{{"id", e.id}, {"path", e.path}, {"label", e.label}};
    if (!e.patient_id.empty()) j["patient_id"] = e.patient_id;
    if (!e.mask.empty()) j["mask"] = e.mask;
    entries.push_back(std::move(j));
  }
  return {{"format", "cxr-manifest"}, {"version", 1}, {"class_names", m.class_names}, {"entries", entries}};
}

void save_manifest(const fs::path& path, const DatasetManifest& m) {
  write_text_file(path, manifest_to_json(m).dump(1) + "\n");
}

Splits split_dataset(const DatasetManifest& m, const Fractions& f, std::uint64_t seed) {
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw ArgumentError("split fractions must be nonnegative and sum to 1");
  Splits s;
  for (auto* part : {&s.train, &s.val, &s.test}) {
    part->class_names = m.class_names;
    part->base_dir = m.base_dir;
  }
  const auto labels = m.labels();
  std::vector<std::size_t> picked[3];
  for (std::size_t c = 0; c < m.class_names.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    Rng rng(derive_seed(seed, c));
    shuffle(members.begin(), members.end(), rng);
    const auto n = members.size();
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.test + 1e-9));
    const auto n_train = n - n_val - n_test;
    if ((f.train > 0 && n_train == 0) || (f.val > 0 && n_val == 0) || (f.test > 0 && n_test == 0))
      s.warnings.push_back("class '" + m.class_names[c] + "' with " + std::to_string(n) +
                           " samples does not reach every split");
    for (std::size_t pos = 0; pos < n; ++pos) picked[pos < n_train ? 0 : pos < n_train + n_val ? 1 : 2].push_back(members[pos]);
  }
  // Each split keeps manifest order.
  DatasetManifest* parts[3] = {&s.train, &s.val, &s.test};
  for (int p = 0; p < 3; ++p) {
    std::sort(picked[p].begin(), picked[p].end());
    for (auto i : picked[p]) parts[p]->entries.push_back(m.entries[i]);
  }
  return s;
}

}  // namespace cxr::pipeline
