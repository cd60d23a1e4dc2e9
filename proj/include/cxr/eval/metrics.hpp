#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace cxr::eval {

/// counts[actual * k + predicted].
struct ConfusionMatrix {
  std::size_t k = 0;
  std::vector<std::uint64_t> counts;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes) : k(classes), counts(classes * classes, 0) {}
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> values);

  std::uint64_t& at(std::size_t actual, std::size_t predicted) { return counts[actual * k + predicted]; }
  std::uint64_t at(std::size_t actual, std::size_t predicted) const { return counts[actual * k + predicted]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t actual) const;
  std::uint64_t column_sum(std::size_t predicted) const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const std::size_t> actual, std::span<const std::size_t> predicted, std::size_t k);

/// Elementwise sum.
ConfusionMatrix overlap(std::span<const ConfusionMatrix> matrices);

/// One-vs-rest counts and percentages for one class. Ratios with a zero
/// denominator are reported as 0 and named in `degenerate`.
struct ClassMetrics {
  std::uint64_t support = 0;
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::vector<std::string> degenerate;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t class_idx);

/// Support-weighted mean of each percentage; counts and support are summed.
ClassMetrics weighted_average(std::span<const ClassMetrics> ms);

/// Unweighted mean over entries, support included (the tables' "Average" rows).
ClassMetrics mean_of(std::span<const ClassMetrics> ms);

/// Two decimals, half up: 98.015 -> "98.02".
std::string format_percent(double value);

nlohmann::json to_json(const ConfusionMatrix& cm);
ConfusionMatrix confusion_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClassMetrics& m);
ClassMetrics metrics_from_json(const nlohmann::json& j);

}  // namespace cxr::eval
