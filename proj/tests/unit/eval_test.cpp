#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cxr/errors.hpp"
#include "cxr/eval/folds.hpp"
#include "cxr/eval/metrics.hpp"
#include "cxr/eval/report.hpp"
#include "cxr/rng.hpp"

using namespace cxr::eval;

namespace {

// Reference overlapped matrix, class order COVID-19, Normal, Pneumonia.
ConfusionMatrix overlapped_reference() { return ConfusionMatrix(3, {987, 3, 10, 4, 937, 59, 16, 72, 912}); }

struct Row {
  double se, sp, pre, acc, f1;
};

void expect_row(const ClassMetrics& m, const Row& r, double tol) {
  EXPECT_NEAR(m.sensitivity, r.se, tol);
  EXPECT_NEAR(m.specificity, r.sp, tol);
  EXPECT_NEAR(m.precision, r.pre, tol);
  EXPECT_NEAR(m.accuracy, r.acc, tol);
  EXPECT_NEAR(m.f1, r.f1, tol);
}

struct Pairs {
  std::vector<std::size_t> actual, predicted;
};

Pairs random_pairs(std::size_t n, std::size_t k, std::uint64_t seed) {
  cxr::Rng rng(seed);
  Pairs p;
  for (std::size_t i = 0; i < n; ++i) {
    p.actual.push_back(rng.below(k));
    // Mostly right, to resemble a classifier.
    p.predicted.push_back(rng.bernoulli(0.7) ? p.actual.back() : rng.below(k));
  }
  return p;
}

}  // namespace

TEST(Metrics, OverlappedMatrixReproducesReferenceMetrics) {
  const auto cm = overlapped_reference();
  expect_row(class_metrics(cm, 0), {98.7, 99.0, 98.02, 98.9, 98.36}, 0.05);
  expect_row(class_metrics(cm, 1), {93.7, 96.25, 92.59, 95.4, 93.14}, 0.05);
  expect_row(class_metrics(cm, 2), {91.2, 96.55, 92.97, 94.77, 92.07}, 0.05);

  std::vector<ClassMetrics> ms;
  for (std::size_t c = 0; c < 3; ++c) ms.push_back(class_metrics(cm, c));
  const auto avg = weighted_average(ms);
  EXPECT_EQ(avg.support, 3000u);
  expect_row(avg, {94.54, 97.27, 94.53, 96.36, 94.57}, 0.05);
}

TEST(Metrics, ExactRatiosOnReferenceMatrix) {
  const auto m = class_metrics(overlapped_reference(), 0);
  EXPECT_EQ(m.tp, 987u);
  EXPECT_EQ(m.fn, 13u);
  EXPECT_EQ(m.fp, 20u);
  EXPECT_EQ(m.tn, 1980u);
  EXPECT_DOUBLE_EQ(m.precision, 100.0 * 987.0 / 1007.0);
  EXPECT_DOUBLE_EQ(m.f1, 100.0 * 1974.0 / 2007.0);
  EXPECT_EQ(format_percent(m.sensitivity), "98.70");
  EXPECT_EQ(format_percent(m.specificity), "99.00");
  EXPECT_EQ(format_percent(m.f1), "98.36");
}

TEST(Metrics, DiagonalMatrixIsPerfect) {
  const ConfusionMatrix cm(3, {5, 0, 0, 0, 7, 0, 0, 0, 2});
  for (std::size_t c = 0; c < 3; ++c) {
    const auto m = class_metrics(cm, c);
    expect_row(m, {100, 100, 100, 100, 100}, 0.0);
    EXPECT_TRUE(m.degenerate.empty());
  }
}

TEST(Metrics, EmptyClassIsFlaggedNotThrown) {
  const ConfusionMatrix cm(3, {4, 1, 0, 2, 3, 0, 0, 0, 0});
  const auto m = class_metrics(cm, 2);
  EXPECT_EQ(m.support, 0u);
  EXPECT_EQ(m.sensitivity, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.specificity, 100.0);
  EXPECT_EQ(m.degenerate, (std::vector<std::string>{"sensitivity", "precision", "f1"}));
  EXPECT_THROW(class_metrics(cm, 3), cxr::ArgumentError);
}

TEST(Confusion, DirectDefinition) {
  const std::vector<std::size_t> a{0}, p{2};
  const auto cm = confusion(a, p, 3);
  EXPECT_EQ(cm.at(0, 2), 1u);
  EXPECT_EQ(cm.total(), 1u);

  const std::vector<std::size_t> labels{0, 1, 2, 2, 1, 2};
  const auto perfect = confusion(labels, labels, 3);
  EXPECT_EQ(perfect, ConfusionMatrix(3, {1, 0, 0, 0, 2, 0, 0, 0, 3}));
}

TEST(Confusion, Errors) {
  const std::vector<std::size_t> a{0, 1}, p{0};
  EXPECT_THROW(confusion(a, p, 3), cxr::ArgumentError);
  const std::vector<std::size_t> bad{0, 3};
  EXPECT_THROW(confusion(bad, bad, 3), cxr::ArgumentError);
  const std::vector<ConfusionMatrix> mixed{ConfusionMatrix(2), ConfusionMatrix(3)};
  EXPECT_THROW(overlap(mixed), cxr::ArgumentError);
}

TEST(Metrics, BruteForceRecount) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t k = 2 + seed % 4;
    const auto p = random_pairs(50 + 13 * seed, k, seed);
    const auto cm = confusion(p.actual, p.predicted, k);
    EXPECT_EQ(cm.total(), p.actual.size());
    std::uint64_t tp_sum = 0, support_sum = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < p.actual.size(); ++i) {
        const bool is = p.actual[i] == c, said = p.predicted[i] == c;
        tp += is && said;
        tn += !is && !said;
        fp += !is && said;
        fn += is && !said;
      }
      const auto m = class_metrics(cm, c);
      ASSERT_EQ(m.tp, tp);
      ASSERT_EQ(m.tn, tn);
      ASSERT_EQ(m.fp, fp);
      ASSERT_EQ(m.fn, fn);
      EXPECT_EQ(m.tp + m.tn + m.fp + m.fn, cm.total());
      auto pct = [](double a, double b) { return b == 0 ? 0.0 : 100.0 * a / b; };
      EXPECT_DOUBLE_EQ(m.sensitivity, pct(tp, tp + fn));
      EXPECT_DOUBLE_EQ(m.specificity, pct(tn, tn + fp));
      EXPECT_DOUBLE_EQ(m.precision, pct(tp, tp + fp));
      EXPECT_DOUBLE_EQ(m.accuracy, pct(tp + tn, tp + tn + fp + fn));
      EXPECT_DOUBLE_EQ(m.f1, pct(2.0 * tp, 2.0 * tp + fp + fn));
      for (double v : {m.sensitivity, m.specificity, m.precision, m.accuracy, m.f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 100.0);
      }
      tp_sum += m.tp;
      support_sum += m.support;
    }
    EXPECT_EQ(tp_sum, cm.trace());
    EXPECT_EQ(support_sum, cm.total());
  }
}

TEST(Overlap, CommutesWithCounting) {
  const auto p = random_pairs(500, 3, 77);
  const auto plan = stratified_kfold(p.actual, 10, 5);
  std::vector<ConfusionMatrix> folds;
  for (std::size_t f = 0; f < plan.k; ++f) {
    std::vector<std::size_t> a, q;
    for (auto i : plan.test_indices(f)) {
      a.push_back(p.actual[i]);
      q.push_back(p.predicted[i]);
    }
    folds.push_back(confusion(a, q, 3));
  }
  const auto whole = confusion(p.actual, p.predicted, 3);
  EXPECT_EQ(overlap(folds), whole);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(class_metrics(overlap(folds), c), class_metrics(whole, c));
  const std::vector<ConfusionMatrix> one{whole};
  EXPECT_EQ(overlap(one), whole);
}

TEST(Average, Identities) {
  const auto cm = overlapped_reference();
  const auto m0 = class_metrics(cm, 0);
  const std::vector<ClassMetrics> single{m0};
  EXPECT_EQ(weighted_average(single), m0);

  std::vector<ClassMetrics> ms;
  for (std::size_t c = 0; c < 3; ++c) ms.push_back(class_metrics(cm, c));
  const auto w = weighted_average(ms);
  const auto u = mean_of(ms);
  EXPECT_NEAR(w.sensitivity, u.sensitivity, 1e-12);
  EXPECT_NEAR(w.f1, u.f1, 1e-12);
  EXPECT_EQ(u.support, 1000u);

  ClassMetrics a, b;
  a.support = 1;
  a.sensitivity = 10;
  b.support = 3;
  b.sensitivity = 50;
  const std::vector<ClassMetrics> uneven{a, b};
  EXPECT_DOUBLE_EQ(weighted_average(uneven).sensitivity, 40.0);
  EXPECT_EQ(weighted_average(uneven).support, 4u);
  EXPECT_THROW(weighted_average(std::span<const ClassMetrics>{}), cxr::ArgumentError);
}

TEST(Format, HalfUp) {
  EXPECT_EQ(format_percent(98.015), "98.02");
  EXPECT_EQ(format_percent(100.0 * 987 / 1007), "98.01");
  EXPECT_EQ(format_percent(92.125), "92.13");
  EXPECT_EQ(format_percent(99.995), "100.00");
  EXPECT_EQ(format_percent(9.995), "10.00");
  EXPECT_EQ(format_percent(0.0), "0.00");
  EXPECT_EQ(format_percent(100.0), "100.00");
  EXPECT_EQ(format_percent(0.004), "0.00");
  EXPECT_EQ(format_percent(0.005), "0.01");
}

TEST(Folds, StratifiedExactPerClass) {
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 3000; ++i) labels.push_back(i % 3);
  const auto plan = stratified_kfold(labels, 10, 42);
  for (std::size_t f = 0; f < 10; ++f) {
    const auto test = plan.test_indices(f);
    ASSERT_EQ(test.size(), 300u);
    std::size_t per[3] = {0, 0, 0};
    for (auto i : test) ++per[labels[i]];
    for (auto c : per) EXPECT_EQ(c, 100u);
    EXPECT_EQ(plan.train_indices(f).size(), 2700u);
  }
  EXPECT_EQ(plan, stratified_kfold(labels, 10, 42));
  EXPECT_NE(plan.assignment, stratified_kfold(labels, 10, 43).assignment);
}

TEST(Folds, StratifiedUnevenBound) {
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 47; ++i) labels.push_back(0);
  for (std::size_t i = 0; i < 103; ++i) labels.push_back(1);
  for (std::size_t i = 0; i < 11; ++i) labels.push_back(2);
  const auto plan = stratified_kfold(labels, 10, 1);
  std::vector<std::size_t> sizes(10, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<std::size_t> per(10, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) ++per[plan.assignment[i]];
    const auto [lo, hi] = std::minmax_element(per.begin(), per.end());
    EXPECT_LE(*hi - *lo, 1u);
  }
  for (auto a : plan.assignment) ++sizes[a];
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  EXPECT_LE(*hi - *lo, 1u);
  std::set<std::size_t> seen;
  for (std::size_t f = 0; f < 10; ++f)
    for (auto i : plan.test_indices(f)) EXPECT_TRUE(seen.insert(i).second);
  EXPECT_EQ(seen.size(), labels.size());
}

TEST(Folds, DegenerateAndErrors) {
  const std::vector<std::size_t> labels{0, 1, 1, 0, 2};
  const auto one = stratified_kfold(labels, 1, 3);
  EXPECT_EQ(one.test_indices(0).size(), 5u);
  EXPECT_TRUE(one.train_indices(0).empty());
  EXPECT_THROW(stratified_kfold(labels, 2, 3), cxr::ArgumentError);
  EXPECT_THROW(stratified_kfold(labels, 0, 3), cxr::ArgumentError);
  EXPECT_THROW(unstratified_kfold(3, 4, 0), cxr::ArgumentError);
  EXPECT_EQ(parse_fold_mode("unstratified"), FoldMode::unstratified);
  EXPECT_EQ(to_string(FoldMode::stratified), "stratified");
  EXPECT_THROW(parse_fold_mode("random"), cxr::ArgumentError);
}

TEST(Folds, Unstratified) {
  const auto plan = unstratified_kfold(3000, 10, 9);
  EXPECT_EQ(plan.mode, FoldMode::unstratified);
  for (std::size_t f = 0; f < 10; ++f) EXPECT_EQ(plan.test_indices(f).size(), 300u);
  EXPECT_EQ(plan, unstratified_kfold(3000, 10, 9));
}

namespace {

CrossValidation sample_cv(bool perfect) {
  CrossValidation cv;
  cv.class_names = {"COVID-19", "Normal", "Pneumonia"};
  const auto p = random_pairs(300, 3, 11);
  const auto plan = stratified_kfold(p.actual, 10, 2);
  for (std::size_t f = 0; f < 10; ++f) {
    std::vector<std::size_t> a, q;
    for (auto i : plan.test_indices(f)) {
      a.push_back(p.actual[i]);
      q.push_back(perfect ? p.actual[i] : p.predicted[i]);
    }
    cv.folds.push_back(confusion(a, q, 3));
  }
  return cv;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto end = s.find('\n', start);
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

TEST(Report, CsvLayout) {
  const auto tables = csv_tables(sample_cv(false));
  std::set<std::string> names;
  for (const auto& [name, _] : tables) names.insert(name);
  EXPECT_EQ(names, (std::set<std::string>{"class_covid-19.csv", "class_normal.csv", "class_pneumonia.csv", "folds_weighted.csv",
                                          "overlapped_confusion.csv", "overlapped_metrics.csv"}));
  const auto covid = lines(tables.at("class_covid-19.csv"));
  ASSERT_EQ(covid.size(), 12u);
  EXPECT_EQ(covid[0], "Fold,Support,Sensitivity,Specificity,Precision,Accuracy,F1-Score");
  EXPECT_EQ(covid[1].substr(0, 2), "1,");
  EXPECT_EQ(covid[11].substr(0, 8), "Average,");
  EXPECT_EQ(lines(tables.at("folds_weighted.csv"))[0], covid[0]);
  const auto overlapped = lines(tables.at("overlapped_metrics.csv"));
  ASSERT_EQ(overlapped.size(), 5u);
  EXPECT_EQ(overlapped[0], "Class,Support,Sensitivity,Specificity,Precision,Accuracy,F1-Score");
  EXPECT_EQ(overlapped[1].substr(0, 9), "COVID-19,");
  EXPECT_EQ(lines(tables.at("overlapped_confusion.csv"))[0], "Actual\\Predicted,COVID-19,Normal,Pneumonia");
}

TEST(Report, PerfectClassifierCellsAreHundred) {
  for (const auto& [name, text] : csv_tables(sample_cv(true))) {
    if (name == "overlapped_confusion.csv") continue;
    const auto rows = lines(text);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      std::vector<std::string> cells;
      std::size_t start = 0;
      for (auto comma = rows[r].find(','); comma != std::string::npos; comma = rows[r].find(',', start)) {
        cells.push_back(rows[r].substr(start, comma - start));
        start = comma + 1;
      }
      cells.push_back(rows[r].substr(start));
      ASSERT_EQ(cells.size(), 7u) << name;
      for (std::size_t c = 2; c < 7; ++c) EXPECT_EQ(cells[c], "100.00") << name << " row " << r;
    }
  }
}

TEST(Report, JsonRoundTrip) {
  const auto cv = sample_cv(false);
  const auto j = to_json(cv);
  const auto back = cross_validation_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back, cv);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(j.at("averaging"), "support-weighted macro");
  EXPECT_EQ(confusion_from_json(j["overlapped"]["confusion"]), cv.overlapped());
  const auto m = class_metrics(cv.overlapped(), 1);
  EXPECT_EQ(metrics_from_json(nlohmann::json::parse(to_json(m).dump())), m);
}

TEST(Report, FileStem) {
  EXPECT_EQ(file_stem("COVID-19"), "covid-19");
  EXPECT_EQ(file_stem("Normal lung"), "normal_lung");
}
