#include "cxr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cxr/errors.hpp"

namespace cxr::eval {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> values) : k(classes), counts(std::move(values)) {
  if (counts.size() != k * k) throw ArgumentError("confusion matrix needs k*k counts");
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::row_sum(std::size_t actual) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < k; ++p) s += at(actual, p);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t a = 0; a < k; ++a) s += at(a, predicted);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < k; ++c) s += at(c, c);
  return s;
}

ConfusionMatrix confusion(std::span<const std::size_t> actual, std::span<const std::size_t> predicted, std::size_t k) {
  if (actual.size() != predicted.size()) throw ArgumentError("actual and predicted labels differ in length");
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] >= k || predicted[i] >= k) throw ArgumentError("label at position " + std::to_string(i) + " is outside 0.." + std::to_string(k - 1));
    ++cm.at(actual[i], predicted[i]);
  }
  return cm;
}

ConfusionMatrix overlap(std::span<const ConfusionMatrix> matrices) {
  if (matrices.empty()) throw ArgumentError("nothing to overlap");
  ConfusionMatrix sum(matrices.front().k);
  for (const auto& m : matrices) {
    if (m.k != sum.k) throw ArgumentError("confusion matrices differ in class count");
    for (std::size_t i = 0; i < sum.counts.size(); ++i) sum.counts[i] += m.counts[i];
  }
  return sum;
}

namespace {

double percent(std::uint64_t num, std::uint64_t den, const char* name, std::vector<std::string>& degenerate) {
  if (den == 0) {
    degenerate.emplace_back(name);
    return 0.0;
  }
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c) {
  if (c >= cm.k) throw ArgumentError("class index outside the confusion matrix");
  ClassMetrics m;
  const std::uint64_t total = cm.total();
  m.tp = cm.at(c, c);
  m.fn = cm.row_sum(c) - m.tp;
  m.fp = cm.column_sum(c) - m.tp;
  m.tn = total - m.tp - m.fn - m.fp;
  m.support = m.tp + m.fn;
  m.sensitivity = percent(m.tp, m.tp + m.fn, "sensitivity", m.degenerate);
  m.specificity = percent(m.tn, m.fp + m.tn, "specificity", m.degenerate);
  m.precision = percent(m.tp, m.tp + m.fp, "precision", m.degenerate);
  m.accuracy = percent(m.tp + m.tn, total, "accuracy", m.degenerate);
  m.f1 = percent(2 * m.tp, 2 * m.tp + m.fp + m.fn, "f1", m.degenerate);
  return m;
}

namespace {

ClassMetrics combine(std::span<const ClassMetrics> ms, bool by_support) {
  if (ms.empty()) throw ArgumentError("cannot average an empty metric list");
  ClassMetrics out;
  double weight_sum = 0.0;
  for (const auto& m : ms) {
    const double w = by_support ? static_cast<double>(m.support) : 1.0;
    out.support += m.support;
    out.tp += m.tp;
    out.tn += m.tn;
    out.fp += m.fp;
    out.fn += m.fn;
    out.sensitivity += w * m.sensitivity;
    out.specificity += w * m.specificity;
    out.precision += w * m.precision;
    out.accuracy += w * m.accuracy;
    out.f1 += w * m.f1;
    weight_sum += w;
    for (const auto& d : m.degenerate)
      if (std::find(out.degenerate.begin(), out.degenerate.end(), d) == out.degenerate.end()) out.degenerate.push_back(d);
  }
  if (weight_sum == 0.0) {
    out.sensitivity = out.specificity = out.precision = out.accuracy = out.f1 = 0.0;
    out.degenerate.emplace_back("weights");
    return out;
  }
  for (double* v : {&out.sensitivity, &out.specificity, &out.precision, &out.accuracy, &out.f1}) *v /= weight_sum;
  return out;
}

}  // namespace

ClassMetrics weighted_average(std::span<const ClassMetrics> ms) { return combine(ms, true); }

ClassMetrics mean_of(std::span<const ClassMetrics> ms) {
  ClassMetrics out = combine(ms, false);
  out.support = static_cast<std::uint64_t>(std::floor(static_cast<double>(out.support) / static_cast<double>(ms.size()) + 0.5));
  return out;
}

std::string format_percent(double value) {
  // Printing to nine places first absorbs binary representation error, so
  // decimal ties such as 98.015 round up as they would by hand.
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", value);
  std::string s = buf;
  const auto dot = s.find('.');
  std::string digits = s.substr(0, dot) + s.substr(dot + 1, 2);
  const bool up = s[dot + 3] >= '5';
  if (up) {
    std::size_t i = digits.size();
    while (i > 0) {
      --i;
      if (digits[i] == '-') break;
      if (digits[i] == '9') {
        digits[i] = '0';
        if (i == 0 || digits[i - 1] == '-') digits.insert(i, "1");
        continue;
      }
      ++digits[i];
      break;
    }
  }
  return digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t a = 0; a < cm.k; ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < cm.k; ++p) row.push_back(cm.at(a, p));
    rows.push_back(std::move(row));
  }
  return rows;
}

ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  ConfusionMatrix cm(j.size());
  for (std::size_t a = 0; a < cm.k; ++a) {
    if (j[a].size() != cm.k) throw ArgumentError("confusion matrix rows must be square");
    for (std::size_t p = 0; p < cm.k; ++p) cm.at(a, p) = j[a][p].get<std::uint64_t>();
  }
  return cm;
}

nlohmann::json to_json(const ClassMetrics& m) {
  return {{"support", m.support},         {"tp", m.tp},
          {"tn", m.tn},                   {"fp", m.fp},
          {"fn", m.fn},                   {"sensitivity", m.sensitivity},
          {"specificity", m.specificity}, {"precision", m.precision},
          {"accuracy", m.accuracy},       {"f1", m.f1},
          {"degenerate", m.degenerate}};
}

ClassMetrics metrics_from_json(const nlohmann::json& j) {
  ClassMetrics m;
  m.support = j.at("support").get<std::uint64_t>();
  m.tp = j.at("tp").get<std::uint64_t>();
  m.tn = j.at("tn").get<std::uint64_t>();
  m.fp = j.at("fp").get<std::uint64_t>();
  m.fn = j.at("fn").get<std::uint64_t>();
  m.sensitivity = j.at("sensitivity").get<double>();
  m.specificity = j.at("specificity").get<double>();
  m.precision = j.at("precision").get<double>();
  m.accuracy = j.at("accuracy").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.degenerate = j.at("degenerate").get<std::vector<std::string>>();
  return m;
}

}  // namespace cxr::eval
