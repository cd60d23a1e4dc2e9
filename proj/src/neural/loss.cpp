#include "cxr/neural/loss.hpp"

#include <algorithm>
#include <cmath>

namespace cxr::neural {

template <class T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw ArgumentError("softmax expects [B, K] logits");
  Tensor<T> p(logits.shape());
  const std::size_t K = logits.dim(1);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    const T* z = logits.data() + b * K;
    T* y = p.data() + b * K;
    const T mx = *std::max_element(z, z + K);
    T sum{0};
    for (std::size_t k = 0; k < K; ++k) sum += (y[k] = std::exp(z[k] - mx));
    for (std::size_t k = 0; k < K; ++k) y[k] /= sum;
  }
  return p;
}

template <class T>
LossResult<T> weighted_ce_loss(const Tensor<T>& logits, std::span<const std::size_t> labels, std::span<const double> weights,
                               double normalizer) {
  if (logits.rank() != 2) throw ArgumentError("cross-entropy expects [B, K] logits");
  const std::size_t B = logits.dim(0);
  const std::size_t K = logits.dim(1);
  if (labels.size() != B) throw ArgumentError("one label per batch row required");
  if (weights.size() != K) throw ArgumentError("one class weight per logit column required");
  if (!(normalizer > 0.0)) throw ArgumentError("loss normalizer must be positive");
  LossResult<T> r;
  r.grad = softmax_rows(logits);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] >= K) throw ArgumentError("label " + std::to_string(labels[b]) + " out of range");
    const T* z = logits.data() + b * K;
    const double mx = *std::max_element(z, z + K);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(static_cast<double>(z[k]) - mx);
    const double ce = mx + std::log(sum) - static_cast<double>(z[labels[b]]);
    const double w = weights[labels[b]];
    total += w * ce;
    T* g = r.grad.data() + b * K;
    g[labels[b]] -= T{1};
    const T scale = static_cast<T>(w / normalizer);
    for (std::size_t k = 0; k < K; ++k) g[k] *= scale;
  }
  r.loss = total / normalizer;
  return r;
}

template <class T>
LossResult<T> weighted_ce_loss(const Tensor<T>& logits, std::span<const std::size_t> labels, std::span<const double> weights) {
  double normalizer = 0.0;
  for (auto y : labels) {
    if (y >= weights.size()) throw ArgumentError("label " + std::to_string(y) + " out of range");
    normalizer += weights[y];
  }
  return weighted_ce_loss(logits, labels, weights, normalizer);
}

template <class T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets, double normalizer) {
  if (logits.shape() != targets.shape()) throw ArgumentError("logits and targets differ in shape");
  if (normalizer == 0.0) normalizer = static_cast<double>(logits.size());
  LossResult<T> r;
  r.grad = Tensor<T>(logits.shape());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double z = logits[k];
    const double y = targets[k];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    const double p = 1.0 / (1.0 + std::exp(-z));
    r.grad[k] = static_cast<T>((p - y) / normalizer);
  }
  r.loss = total / normalizer;
  return r;
}

std::size_t argmax(std::span<const float> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

#define CXR_INSTANTIATE(T)                                                                                              \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                                                    \
  template LossResult<T> weighted_ce_loss(const Tensor<T>&, std::span<const std::size_t>, std::span<const double>);     \
  template LossResult<T> weighted_ce_loss(const Tensor<T>&, std::span<const std::size_t>, std::span<const double>,      \
                                          double);                                                                      \
  template LossResult<T> bce_with_logits(const Tensor<T>&, const Tensor<T>&, double);

CXR_INSTANTIATE(float)
CXR_INSTANTIATE(double)
#undef CXR_INSTANTIATE

}  // namespace cxr::neural
