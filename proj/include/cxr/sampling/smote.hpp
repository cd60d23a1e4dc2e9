#pragma once

#include <cstdint>
#include <vector>

#include "cxr/matrix.hpp"
#include "cxr/sampling/feature_set.hpp"

namespace cxr::sampling {

inline constexpr std::size_t kDefaultNeighbors = 5;

/// The k rows nearest to `query` by Euclidean distance, excluding the query
/// row itself, nearest first with ties going to the lower row index.
std::vector<std::size_t> knn_indices(const Matrix<float>& x, std::size_t query, std::size_t k);

struct Oversampled {
  Matrix<float> rows;  ///< originals first, then synthetic rows
  std::vector<Generator> generators;
};

/// Grows one class to `target` rows by interpolating between a random original
/// row and one of its k nearest neighbours within the class. k shrinks to
/// size-1 for small classes; a single row is duplicated.
Oversampled smote_oversample(const Matrix<float>& class_rows, std::size_t target, std::size_t k, std::uint64_t seed);

/// smote_oversample on every class independently, each from its own sub-seed.
/// Originals keep their positions; synthetic rows are appended class by class.
FeatureSet balance_dataset(const FeatureSet& fs, std::size_t target_per_class, std::size_t k, std::uint64_t seed);

}  // namespace cxr::sampling
