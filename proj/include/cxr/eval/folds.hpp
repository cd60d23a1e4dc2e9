#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cxr::eval {

enum class FoldMode { stratified, unstratified };

std::string_view to_string(FoldMode mode);
FoldMode parse_fold_mode(std::string_view name);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  ///< fold index per sample
  std::uint64_t seed = 0;
  FoldMode mode = FoldMode::stratified;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Each class is shuffled from its own sub-seed and dealt round-robin; the
/// dealing position carries over from one class to the next so fold sizes
/// also differ by at most one. Throws when a present class has fewer than k
/// samples.
FoldPlan stratified_kfold(std::span<const std::size_t> labels, std::size_t k, std::uint64_t seed);

/// All samples shuffled together and dealt round-robin.
FoldPlan unstratified_kfold(std::size_t n, std::size_t k, std::uint64_t seed);

FoldPlan make_folds(std::span<const std::size_t> labels, std::size_t k, std::uint64_t seed, FoldMode mode);

}  // namespace cxr::eval
