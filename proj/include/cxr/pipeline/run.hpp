#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cxr/errors.hpp"
#include "cxr/eval/report.hpp"
#include "cxr/pipeline/config.hpp"
#include "cxr/pipeline/manifest.hpp"

namespace cxr::pipeline {

struct Artifact {
  std::string path;  ///< relative to the run directory, or to the manifest for inputs outside it
  std::string sha256;

  friend bool operator==(const Artifact&, const Artifact&) = default;
};

struct StageRecord {
  std::string name;
  std::vector<Artifact> inputs;
  std::vector<Artifact> outputs;
  nlohmann::json details = nlohmann::json::object();

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

/// Everything a run produced except wall-clock durations, which go to a
/// separate timings file so identical runs give identical reports.
struct RunReport {
  nlohmann::json config;
  nlohmann::json seeds;
  nlohmann::json dataset;
  std::vector<StageRecord> stages;
  eval::CrossValidation cv;
  std::string fold_mode;
  std::string smote_placement;
  nlohmann::json leakage = nlohmann::json::object();
  std::vector<std::string> deviations;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

inline constexpr int kReportVersion = 1;

nlohmann::json report_to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);

/// Writes report.json plus the CSV tables of eval::csv_tables into `dir`.
void emit_report(const RunReport& r, const std::filesystem::path& dir);

/// A stage failed; `stage` names it. The partial report has been written.
struct StageFailure : Error {
  StageFailure(const std::string& stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage(stage) {}
  std::string stage;
};

/// Run-directory layout:
///   preprocessed/<id>.pgm        resized, filtered, enhanced
///   segmentation/masks/<id>.pgm  predicted (or manifest) lung masks
///   segmentation/images/<id>.pgm masked images, the encoder's input
///   */index.json                 per-image input and output digests
///   models/                      segmenter.cxrm, encoder.cxrm
///   features/                    features.cxrf, balanced.cxrf
///   svm/fold_NN.cxrs             one model per fold
///   report/                      report.json and CSV tables
///   timings.json                 stage durations in seconds
/// Progress lines go to `log` when non-null.
RunReport run_all(const PipelineConfig& cfg, const DatasetManifest& manifest, const std::filesystem::path& out_dir,
                  std::ostream* log = nullptr);

}  // namespace cxr::pipeline
