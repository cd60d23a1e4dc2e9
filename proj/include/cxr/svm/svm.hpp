#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cxr/matrix.hpp"
#include "cxr/sampling/feature_set.hpp"

namespace cxr::svm {

/// exp(-gamma * |x - y|^2).
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

struct SvmBinaryModel {
  Matrix<double> support_vectors;
  std::vector<double> coefficients;  ///< alpha_i * y_i
  double bias = 0.0;
  double gamma = 1.0;
  double C = 1.0;

  friend bool operator==(const SvmBinaryModel&, const SvmBinaryModel&) = default;
};

struct SmoParams {
  double C = 1.0;
  double gamma = 1.0;
  double tol = 1e-3;
  /// Consecutive sweeps without any multiplier change before giving up.
  std::size_t max_passes = 10;
  /// Hard limit on sweeps over the training set.
  std::size_t max_sweeps = 100000;
  std::uint64_t seed = 0;
};

/// Solver internals for checking the dual solution.
struct SmoDiagnostics {
  std::vector<double> alpha;         ///< one per training row
  std::vector<double> kkt_residual;  ///< KKT violation per training row, 0 when satisfied
  double sum_alpha_y = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;  ///< every residual <= tol
};

/// Sequential minimal optimisation on the RBF dual. Each sweep visits every
/// KKT violator and pairs it with a seeded-random second index, falling back
/// to the largest |E_i - E_j| and then to a scan when the random partner
/// makes no progress. Returns once a sweep finds no violator, or after
/// max_passes sweeps in a row change nothing.
SvmBinaryModel smo_train(const Matrix<double>& x, std::span<const int> y, const SmoParams& params,
                         SmoDiagnostics* diagnostics = nullptr);

/// sum_i coeff_i K(sv_i, x) + bias.
double decision_value(const SvmBinaryModel& m, std::span<const double> x);

/// Per-feature affine map to zero mean and unit variance, fitted on training
/// rows. Constant features map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  ///< 1 / stddev, or 0 for constant features

  static Standardizer fit(const Matrix<float>& x);
  std::vector<double> apply(std::span<const float> row) const;
  Matrix<double> apply(const Matrix<float>& x) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// 1 / (d * mean per-feature variance) of a matrix.
double scale_gamma(const Matrix<double>& x);

struct SvmParams {
  double C = 1.0;
  double gamma = 0.0;  ///< 0 selects scale_gamma on the standardized training rows
  double tol = 1e-3;
  std::size_t max_passes = 10;

  friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

struct PairModel {
  std::size_t negative = 0;  ///< lower class index, labelled -1
  std::size_t positive = 0;
  SvmBinaryModel model;

  friend bool operator==(const PairModel&, const PairModel&) = default;
};

struct SvmMultiModel {
  std::vector<std::string> class_names;
  Standardizer standardizer;
  SvmParams params;  ///< gamma holds the resolved value
  std::vector<PairModel> pairs;

  friend bool operator==(const SvmMultiModel&, const SvmMultiModel&) = default;
};

/// One binary SMO model per class pair, trained concurrently from derived
/// sub-seeds.
SvmMultiModel ovo_train(const sampling::FeatureSet& fs, const SvmParams& params, std::uint64_t seed);

struct Vote {
  std::size_t predicted = 0;
  std::vector<std::size_t> votes;        ///< per class
  std::vector<double> margin;            ///< per class: sum of |f| over won pairings
  std::vector<double> decisions;         ///< per pair, in model order
};

/// Majority vote over pairwise signs (f > 0 votes for the higher class). Ties
/// go to the larger margin sum, then to the lower class index.
Vote ovo_vote(const SvmMultiModel& m, std::span<const float> x);
std::size_t ovo_predict(const SvmMultiModel& m, std::span<const float> x);
std::vector<std::size_t> ovo_predict_all(const SvmMultiModel& m, const Matrix<float>& x);

/// Model file, version 1:
///
///   "CXRSVMMD"          8 bytes
///   format version      u32 LE
///   header length N     u64 LE
///   header              N bytes of JSON: class_names, C, gamma, tol,
///                       max_passes, mean, scale,
///                       pairs[{negative, positive, support_count, bias}]
///   per pair            support_count * d f64 LE support vectors, then
///                       support_count f64 LE coefficients
inline constexpr std::uint32_t kSvmFormatVersion = 1;

std::vector<std::uint8_t> serialize_svm(const SvmMultiModel& m);
SvmMultiModel deserialize_svm(std::span<const std::uint8_t> bytes);
void save_svm(const std::filesystem::path& path, const SvmMultiModel& m);
SvmMultiModel load_svm(const std::filesystem::path& path);

}  // namespace cxr::svm
