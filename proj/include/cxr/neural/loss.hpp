#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cxr/neural/tensor.hpp"

namespace cxr::neural {

template <class T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  ///< dLoss/dLogits
};

/// Class-weighted softmax cross-entropy over logits [B, K]:
/// loss = sum_i w[y_i] CE_i / sum_i w[y_i].
template <class T>
LossResult<T> weighted_ce_loss(const Tensor<T>& logits, std::span<const std::size_t> labels, std::span<const double> weights);

/// Same per-row terms divided by an explicit normalizer instead of the batch
/// weight sum. Used when a batch is evaluated in pieces.
template <class T>
LossResult<T> weighted_ce_loss(const Tensor<T>& logits, std::span<const std::size_t> labels, std::span<const double> weights,
                               double normalizer);

/// Mean binary cross-entropy of sigmoid(logits) against targets in {0,1},
/// averaged over `normalizer` elements (all elements when 0).
template <class T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets, double normalizer = 0.0);

/// Row-wise softmax of [B, K], max-subtracted.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

std::size_t argmax(std::span<const float> row);

}  // namespace cxr::neural
