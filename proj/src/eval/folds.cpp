#include "cxr/eval/folds.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr::eval {

std::string_view to_string(FoldMode mode) { return mode == FoldMode::stratified ? "stratified" : "unstratified"; }

FoldMode parse_fold_mode(std::string_view name) {
  if (name == "stratified") return FoldMode::stratified;
  if (name == "unstratified") return FoldMode::unstratified;
  throw ArgumentError("unknown fold mode '" + std::string(name) + "' (expected stratified or unstratified)");
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  if (fold >= k) throw ArgumentError("fold index out of range");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  if (fold >= k) throw ArgumentError("fold index out of range");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(i);
  return out;
}

FoldPlan stratified_kfold(std::span<const std::size_t> labels, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  FoldPlan plan{k, std::vector<std::size_t>(labels.size(), 0), seed, FoldMode::stratified};
  const std::size_t classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  std::size_t next = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    auto& m = members[c];
    if (m.empty()) continue;
    if (m.size() < k)
      throw ArgumentError("class " + std::to_string(c) + " has " + std::to_string(m.size()) + " samples, fewer than k=" +
                          std::to_string(k));
    Rng rng(derive_seed(seed, c));
    shuffle(m.begin(), m.end(), rng);
    for (std::size_t idx : m) {
      plan.assignment[idx] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

FoldPlan unstratified_kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  if (n < k) throw ArgumentError("cannot split " + std::to_string(n) + " samples into " + std::to_string(k) + " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order.begin(), order.end(), rng);
  FoldPlan plan{k, std::vector<std::size_t>(n, 0), seed, FoldMode::unstratified};
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignment[order[pos]] = pos % k;
  return plan;
}

FoldPlan make_folds(std::span<const std::size_t> labels, std::size_t k, std::uint64_t seed, FoldMode mode) {
  return mode == FoldMode::stratified ? stratified_kfold(labels, k, seed) : unstratified_kfold(labels.size(), k, seed);
}

}  // namespace cxr::eval
