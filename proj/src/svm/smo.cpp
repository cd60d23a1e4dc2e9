#include <algorithm>
#include <cmath>

#include "cxr/parallel.hpp"
#include "cxr/rng.hpp"
#include "cxr/svm/svm.hpp"

namespace cxr::svm {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) throw ArgumentError("kernel arguments differ in dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

namespace {

class Solver {
 public:
  Solver(const Matrix<double>& x, std::span<const int> y, const SmoParams& p)
      : n_(x.rows), y_(y), p_(p), K_(n_ * n_), alpha_(n_, 0.0), F_(n_, 0.0), rng_(p.seed) {
    parallel_for(n_, [&](std::size_t i) {
      for (std::size_t j = i; j < n_; ++j) K_[i * n_ + j] = rbf_kernel(x.row(i), x.row(j), p_.gamma);
    });
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < i; ++j) K_[i * n_ + j] = K_[j * n_ + i];
  }

  void run(SmoDiagnostics* diag) {
    std::size_t idle = 0, sweeps = 0;
    while (sweeps < p_.max_sweeps) {
      ++sweeps;
      std::size_t violators = 0, changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!violates(i)) continue;
        ++violators;
        changed += examine(i);
      }
      if (violators == 0) {
        // The cached outputs drift with every update; confirm on exact sums.
        refresh_outputs();
        if (!any_violator()) break;
        continue;
      }
      if (changed == 0) {
        if (++idle >= p_.max_passes) break;
      } else {
        idle = 0;
      }
    }
    refresh_outputs();
    if (diag) {
      diag->alpha = alpha_;
      diag->kkt_residual.resize(n_);
      diag->sum_alpha_y = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        diag->kkt_residual[i] = residual(i);
        diag->sum_alpha_y += alpha_[i] * y_[i];
      }
      diag->sweeps = sweeps;
      diag->converged = std::all_of(diag->kkt_residual.begin(), diag->kkt_residual.end(), [&](double r) { return r <= p_.tol; });
    }
  }

  SvmBinaryModel model(const Matrix<double>& x) const {
    SvmBinaryModel m;
    m.support_vectors = Matrix<double>(0, x.cols);
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] <= 0.0) continue;
      m.support_vectors.append_row(x.row(i));
      m.coefficients.push_back(alpha_[i] * y_[i]);
    }
    m.bias = b_;
    m.gamma = p_.gamma;
    m.C = p_.C;
    return m;
  }

 private:
  bool any_violator() const {
    for (std::size_t i = 0; i < n_; ++i)
      if (violates(i)) return true;
    return false;
  }

  double kernel(std::size_t i, std::size_t j) const { return K_[i * n_ + j]; }
  double error(std::size_t i) const { return F_[i] + b_ - y_[i]; }

  // Signed margin violation y*f - 1 mapped to the KKT residual for alpha_i.
  double residual(std::size_t i) const {
    const double r = y_[i] * error(i);
    if (alpha_[i] <= 0.0) return std::max(0.0, -r);
    if (alpha_[i] >= p_.C) return std::max(0.0, r);
    return std::abs(r);
  }
  bool violates(std::size_t i) const { return residual(i) > p_.tol; }

  void refresh_outputs() {
    for (std::size_t k = 0; k < n_; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j)
        if (alpha_[j] > 0.0) s += alpha_[j] * y_[j] * kernel(k, j);
      F_[k] = s;
    }
  }

  bool examine(std::size_t i) {
    if (n_ < 2) return false;
    std::size_t j = static_cast<std::size_t>(rng_.below(n_ - 1));
    if (j >= i) ++j;
    if (take_step(i, j)) return true;

    const double ei = error(i);
    std::size_t best = n_;
    double gap = -1.0;
    for (std::size_t k = 0; k < n_; ++k) {
      if (k == i || alpha_[k] <= 0.0 || alpha_[k] >= p_.C) continue;
      const double g = std::abs(ei - error(k));
      if (g > gap) {
        gap = g;
        best = k;
      }
    }
    if (best != n_ && take_step(i, best)) return true;

    const std::size_t start = static_cast<std::size_t>(rng_.below(n_));
    for (std::size_t t = 0; t < n_; ++t) {
      const std::size_t k = (start + t) % n_;
      if (k != i && take_step(i, k)) return true;
    }
    return false;
  }

  bool take_step(std::size_t i, std::size_t j) {
    if (i == j) return false;
    const double yi = y_[i], yj = y_[j];
    const double ai = alpha_[i], aj = alpha_[j];
    const double ei = error(i), ej = error(j);
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(p_.C, p_.C + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - p_.C);
      hi = std::min(p_.C, ai + aj);
    }
    if (hi - lo <= 0.0) return false;
    const double kii = kernel(i, i), kjj = kernel(j, j), kij = kernel(i, j);
    const double eta = 2.0 * kij - kii - kjj;
    if (eta >= 0.0) return false;
    double aj_new = std::clamp(aj - yj * (ei - ej) / eta, lo, hi);
    if (std::abs(aj_new - aj) < 1e-12 * (aj_new + aj + 1e-12)) return false;
    double ai_new = ai + yi * yj * (aj - aj_new);
    // Rounding can leave ai a hair outside the box; snap it back.
    ai_new = std::clamp(ai_new, 0.0, p_.C);
    if (aj_new < 1e-14 * p_.C) aj_new = 0.0;
    if (ai_new < 1e-14 * p_.C) ai_new = 0.0;

    const double di = ai_new - ai, dj = aj_new - aj;
    const double b1 = b_ - ei - yi * di * kii - yj * dj * kij;
    const double b2 = b_ - ej - yi * di * kij - yj * dj * kjj;
    if (ai_new > 0.0 && ai_new < p_.C)
      b_ = b1;
    else if (aj_new > 0.0 && aj_new < p_.C)
      b_ = b2;
    else
      b_ = 0.5 * (b1 + b2);

    for (std::size_t k = 0; k < n_; ++k) F_[k] += yi * di * kernel(i, k) + yj * dj * kernel(j, k);
    alpha_[i] = ai_new;
    alpha_[j] = aj_new;
    return true;
  }

  std::size_t n_;
  std::span<const int> y_;
  SmoParams p_;
  std::vector<double> K_;
  std::vector<double> alpha_;
  std::vector<double> F_;  // sum_j alpha_j y_j K_ij, without bias
  double b_ = 0.0;
  Rng rng_;
};

}  // namespace

SvmBinaryModel smo_train(const Matrix<double>& x, std::span<const int> y, const SmoParams& params, SmoDiagnostics* diagnostics) {
  if (x.rows != y.size()) throw ArgumentError("one label per training row required");
  if (!(params.C > 0.0) || !(params.tol > 0.0) || !(params.gamma > 0.0))
    throw ArgumentError("SMO needs C > 0, tol > 0 and gamma > 0");
  bool neg = false, pos = false;
  for (int v : y) {
    if (v != -1 && v != 1) throw ArgumentError("SMO labels must be -1 or +1");
    (v < 0 ? neg : pos) = true;
  }
  if (!neg || !pos) throw ArgumentError("SMO needs both labels present");
  Solver solver(x, y, params);
  solver.run(diagnostics);
  return solver.model(x);
}

double decision_value(const SvmBinaryModel& m, std::span<const double> x) {
  double s = m.bias;
  for (std::size_t i = 0; i < m.coefficients.size(); ++i)
    s += m.coefficients[i] * rbf_kernel(m.support_vectors.row(i), x, m.gamma);
  return s;
}

}  // namespace cxr::svm
