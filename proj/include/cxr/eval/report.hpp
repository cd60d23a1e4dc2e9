#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cxr/eval/metrics.hpp"

namespace cxr::eval {

/// Cross-validation outcome in the shape of the result tables: per-fold
/// per-class metrics, per-fold support-weighted averages, the overlapped
/// matrix and its per-class metrics.
struct CrossValidation {
  std::vector<std::string> class_names;
  std::vector<ConfusionMatrix> folds;

  ConfusionMatrix overlapped() const;
  /// [fold][class]
  std::vector<std::vector<ClassMetrics>> per_fold() const;
  std::vector<ClassMetrics> overlapped_metrics() const;

  friend bool operator==(const CrossValidation&, const CrossValidation&) = default;
};

inline const std::vector<std::string> kTableColumns{"Support",   "Sensitivity", "Specificity", "Precision",
                                                     "Accuracy", "F1-Score"};

/// JSON with fold matrices, per-fold metrics, weighted fold averages, the
/// overlapped matrix and overlapped per-class metrics with their average.
nlohmann::json to_json(const CrossValidation& cv);
CrossValidation cross_validation_from_json(const nlohmann::json& j);

/// CSV tables keyed by file name:
///   class_<name>.csv      Fold, Support, ... per fold plus an Average row
///   folds_weighted.csv    support-weighted average per fold plus Average
///   overlapped_metrics.csv  Class, Support, ... per class plus Average
///   overlapped_confusion.csv  rows actual, columns predicted
std::map<std::string, std::string> csv_tables(const CrossValidation& cv);

/// File-name-safe form of a class name ("COVID-19" -> "covid-19").
std::string file_stem(const std::string& class_name);

}  // namespace cxr::eval
