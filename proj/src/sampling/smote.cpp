#include "cxr/sampling/smote.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cxr/parallel.hpp"
#include "cxr/rng.hpp"

namespace cxr::sampling {

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<std::size_t> knn_indices(const Matrix<float>& x, std::size_t query, std::size_t k) {
  if (query >= x.rows) throw ArgumentError("query row out of range");
  if (x.rows == 0 || k > x.rows - 1) throw ArgumentError("k must be at most n-1");
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(x.rows - 1);
  for (std::size_t i = 0; i < x.rows; ++i)
    if (i != query) d.emplace_back(squared_distance(x.row(query), x.row(i)), i);
  std::partial_sort(d.begin(), d.begin() + static_cast<long>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

Oversampled smote_oversample(const Matrix<float>& class_rows, std::size_t target, std::size_t k, std::uint64_t seed) {
  const std::size_t n = class_rows.rows;
  if (n == 0) throw ArgumentError("SMOTE needs at least one row");
  if (target < n) throw ArgumentError("SMOTE target " + std::to_string(target) + " is below the class size " + std::to_string(n));
  if (k == 0 && n > 1) throw ArgumentError("SMOTE needs k >= 1");
  Oversampled out{class_rows, {}};
  if (target == n) return out;

  const std::size_t kk = std::min(k, n - 1);
  std::map<std::size_t, std::vector<std::size_t>> neighbours;
  Rng rng(seed);
  std::vector<float> row(class_rows.cols);
  out.rows.values.reserve(target * class_rows.cols);
  for (std::size_t r = n; r < target; ++r) {
    const std::size_t base = rng.below(n);
    std::size_t neighbour = base;
    if (kk > 0) {
      auto it = neighbours.find(base);
      if (it == neighbours.end()) it = neighbours.emplace(base, knn_indices(class_rows, base, kk)).first;
      neighbour = it->second[rng.below(kk)];
    }
    const double gap = rng.uniform();
    const auto x = class_rows.row(base);
    const auto nn = class_rows.row(neighbour);
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = static_cast<float>(static_cast<double>(x[c]) + gap * (static_cast<double>(nn[c]) - static_cast<double>(x[c])));
    out.rows.append_row(row);
    out.generators.push_back({r, base, neighbour, gap});
  }
  return out;
}

FeatureSet balance_dataset(const FeatureSet& fs, std::size_t target_per_class, std::size_t k, std::uint64_t seed) {
  fs.validate();
  const std::size_t classes = fs.class_names.size();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < fs.size(); ++i) members[fs.labels[i]].push_back(i);
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c].size() > target_per_class)
      throw ArgumentError("class " + fs.class_names[c] + " has " + std::to_string(members[c].size()) +
                          " rows, more than the target " + std::to_string(target_per_class));
    if (members[c].empty()) throw ArgumentError("class " + fs.class_names[c] + " has no rows to oversample");
  }

  std::vector<Oversampled> grown(classes);
  parallel_for(classes, [&](std::size_t c) {
    Matrix<float> rows(0, fs.dim());
    for (std::size_t i : members[c]) rows.append_row(fs.features.row(i));
    grown[c] = smote_oversample(rows, target_per_class, k, derive_seed(seed, c));
  });

  FeatureSet out = fs;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t local_n = members[c].size();
    const std::size_t first_new = out.size();
    auto global = [&](std::size_t local) { return local < local_n ? members[c][local] : first_new + (local - local_n); };
    for (std::size_t r = local_n; r < grown[c].rows.rows; ++r) {
      out.features.append_row(grown[c].rows.row(r));
      out.labels.push_back(static_cast<std::uint8_t>(c));
      if (!out.ids.empty()) out.ids.emplace_back();
    }
    for (const auto& g : grown[c].generators) out.generators.push_back({global(g.row), global(g.base), global(g.neighbor), g.gap});
  }
  return out;
}

}  // namespace cxr::sampling
