#include "cxr/eval/report.hpp"

#include <cctype>
#include <sstream>

#include "cxr/errors.hpp"

namespace cxr::eval {

ConfusionMatrix CrossValidation::overlapped() const { return overlap(folds); }

std::vector<std::vector<ClassMetrics>> CrossValidation::per_fold() const {
  std::vector<std::vector<ClassMetrics>> out;
  out.reserve(folds.size());
  for (const auto& cm : folds) {
    std::vector<ClassMetrics> row;
    for (std::size_t c = 0; c < cm.k; ++c) row.push_back(class_metrics(cm, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ClassMetrics> CrossValidation::overlapped_metrics() const {
  const ConfusionMatrix cm = overlapped();
  std::vector<ClassMetrics> out;
  for (std::size_t c = 0; c < cm.k; ++c) out.push_back(class_metrics(cm, c));
  return out;
}

nlohmann::json to_json(const CrossValidation& cv) {
  nlohmann::json folds = nlohmann::json::array();
  const auto per_fold = cv.per_fold();
  std::vector<ClassMetrics> weighted;
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& m : per_fold[f]) classes.push_back(to_json(m));
    weighted.push_back(weighted_average(per_fold[f]));
    folds.push_back({{"fold", f + 1}, {"confusion", to_json(cv.folds[f])}, {"classes", classes},
                     {"weighted_average", to_json(weighted.back())}});
  }
  const auto overlapped = cv.overlapped_metrics();
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& m : overlapped) classes.push_back(to_json(m));
  return {{"class_names", cv.class_names},
          {"averaging", "support-weighted macro"},
          {"folds", folds},
          {"fold_average", to_json(mean_of(weighted))},
          {"overlapped",
           {{"confusion", to_json(cv.overlapped())},
            {"classes", classes},
            {"weighted_average", to_json(weighted_average(overlapped))}}}};
}

CrossValidation cross_validation_from_json(const nlohmann::json& j) {
  CrossValidation cv;
  cv.class_names = j.at("class_names").get<std::vector<std::string>>();
  for (const auto& f : j.at("folds")) {
    cv.folds.push_back(confusion_from_json(f.at("confusion")));
    if (cv.folds.back().k != cv.class_names.size()) throw ArgumentError("fold matrix size does not match class names");
  }
  return cv;
}

std::string file_stem(const std::string& class_name) {
  std::string out;
  for (unsigned char ch : class_name) {
    if (std::isalnum(ch) || ch == '-')
      out.push_back(static_cast<char>(std::tolower(ch)));
    else
      out.push_back('_');
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

void metric_row(std::ostringstream& os, const std::string& label, const ClassMetrics& m) {
  os << csv_field(label) << ',' << m.support << ',' << format_percent(m.sensitivity) << ',' << format_percent(m.specificity)
     << ',' << format_percent(m.precision) << ',' << format_percent(m.accuracy) << ',' << format_percent(m.f1) << '\n';
}

void header(std::ostringstream& os, const char* first) {
  os << first;
  for (const auto& c : kTableColumns) os << ',' << c;
  os << '\n';
}

}  // namespace

std::map<std::string, std::string> csv_tables(const CrossValidation& cv) {
  std::map<std::string, std::string> out;
  const auto per_fold = cv.per_fold();
  const std::size_t k = cv.class_names.size();

  for (std::size_t c = 0; c < k; ++c) {
    std::ostringstream os;
    header(os, "Fold");
    std::vector<ClassMetrics> column;
    for (std::size_t f = 0; f < per_fold.size(); ++f) {
      column.push_back(per_fold[f][c]);
      metric_row(os, std::to_string(f + 1), column.back());
    }
    if (!column.empty()) metric_row(os, "Average", mean_of(column));
    out["class_" + file_stem(cv.class_names[c]) + ".csv"] = os.str();
  }

  {
    std::ostringstream os;
    header(os, "Fold");
    std::vector<ClassMetrics> weighted;
    for (std::size_t f = 0; f < per_fold.size(); ++f) {
      weighted.push_back(weighted_average(per_fold[f]));
      metric_row(os, std::to_string(f + 1), weighted.back());
    }
    if (!weighted.empty()) metric_row(os, "Average", mean_of(weighted));
    out["folds_weighted.csv"] = os.str();
  }

  if (!cv.folds.empty()) {
    const auto overlapped = cv.overlapped_metrics();
    std::ostringstream os;
    header(os, "Class");
    for (std::size_t c = 0; c < k; ++c) metric_row(os, cv.class_names[c], overlapped[c]);
    metric_row(os, "Average", weighted_average(overlapped));
    out["overlapped_metrics.csv"] = os.str();

    const ConfusionMatrix cm = cv.overlapped();
    std::ostringstream cs;
    cs << "Actual\\Predicted";
    for (const auto& n : cv.class_names) cs << ',' << csv_field(n);
    cs << '\n';
    for (std::size_t a = 0; a < k; ++a) {
      cs << csv_field(cv.class_names[a]);
      for (std::size_t p = 0; p < k; ++p) cs << ',' << cm.at(a, p);
      cs << '\n';
    }
    out["overlapped_confusion.csv"] = cs.str();
  }
  return out;
}

}  // namespace cxr::eval
