#include <cmath>

#include "cxr/parallel.hpp"
#include "cxr/rng.hpp"
#include "cxr/svm/svm.hpp"

namespace cxr::svm {

Standardizer Standardizer::fit(const Matrix<float>& x) {
  if (x.rows == 0) throw ArgumentError("cannot standardize an empty matrix");
  Standardizer s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(x.rows);
  std::vector<double> var(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double d = x(i, j) - s.mean[j];
      var[j] += d * d;
    }
  for (std::size_t j = 0; j < x.cols; ++j) {
    const double v = var[j] / static_cast<double>(x.rows);
    s.scale[j] = v > 0.0 ? 1.0 / std::sqrt(v) : 0.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const float> row) const {
  if (row.size() != mean.size()) throw ArgumentError("feature vector length does not match the model");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) * scale[j];
  return out;
}

Matrix<double> Standardizer::apply(const Matrix<float>& x) const {
  Matrix<double> out(0, x.cols);
  out.values.reserve(x.values.size());
  for (std::size_t i = 0; i < x.rows; ++i) out.append_row(apply(x.row(i)));
  return out;
}

double scale_gamma(const Matrix<double>& x) {
  if (x.rows == 0 || x.cols == 0) throw ArgumentError("cannot derive gamma from an empty matrix");
  double total = 0.0;
  for (std::size_t j = 0; j < x.cols; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) m += x(i, j);
    m /= static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) v += (x(i, j) - m) * (x(i, j) - m);
    total += v / static_cast<double>(x.rows);
  }
  const double mean_var = total / static_cast<double>(x.cols);
  return mean_var > 0.0 ? 1.0 / (static_cast<double>(x.cols) * mean_var) : 1.0 / static_cast<double>(x.cols);
}

SvmMultiModel ovo_train(const sampling::FeatureSet& fs, const SvmParams& params, std::uint64_t seed) {
  fs.validate();
  const std::size_t K = fs.class_names.size();
  if (K < 2) throw ArgumentError("one-vs-one needs at least two classes");
  const auto counts = fs.class_counts();
  for (std::size_t c = 0; c < K; ++c)
    if (counts[c] == 0) throw ArgumentError("class " + fs.class_names[c] + " has no training rows");

  SvmMultiModel m;
  m.class_names = fs.class_names;
  m.standardizer = Standardizer::fit(fs.features);
  const Matrix<double> z = m.standardizer.apply(fs.features);
  m.params = params;
  if (m.params.gamma <= 0.0) m.params.gamma = scale_gamma(z);

  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b) m.pairs.push_back({a, b, {}});
  parallel_for(m.pairs.size(), [&](std::size_t p) {
    auto& pair = m.pairs[p];
    Matrix<double> x(0, z.cols);
    std::vector<int> y;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (fs.labels[i] != pair.negative && fs.labels[i] != pair.positive) continue;
      x.append_row(z.row(i));
      y.push_back(fs.labels[i] == pair.positive ? 1 : -1);
    }
    SmoParams sp;
    sp.C = m.params.C;
    sp.gamma = m.params.gamma;
    sp.tol = m.params.tol;
    sp.max_passes = m.params.max_passes;
    sp.seed = derive_seed(seed, p);
    pair.model = smo_train(x, y, sp);
  });
  return m;
}

Vote ovo_vote(const SvmMultiModel& m, std::span<const float> x) {
  const auto z = m.standardizer.apply(x);
  const std::size_t K = m.class_names.size();
  Vote v;
  v.votes.assign(K, 0);
  v.margin.assign(K, 0.0);
  for (const auto& pair : m.pairs) {
    const double f = decision_value(pair.model, z);
    v.decisions.push_back(f);
    const std::size_t winner = f > 0.0 ? pair.positive : pair.negative;
    ++v.votes[winner];
    v.margin[winner] += std::abs(f);
  }
  for (std::size_t c = 1; c < K; ++c) {
    const auto best = v.predicted;
    if (v.votes[c] > v.votes[best] || (v.votes[c] == v.votes[best] && v.margin[c] > v.margin[best])) v.predicted = c;
  }
  return v;
}

std::size_t ovo_predict(const SvmMultiModel& m, std::span<const float> x) { return ovo_vote(m, x).predicted; }

std::vector<std::size_t> ovo_predict_all(const SvmMultiModel& m, const Matrix<float>& x) {
  std::vector<std::size_t> out(x.rows);
  parallel_for(x.rows, [&](std::size_t i) { out[i] = ovo_predict(m, x.row(i)); });
  return out;
}

}  // namespace cxr::svm
