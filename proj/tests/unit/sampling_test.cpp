#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "cxr/rng.hpp"
#include "cxr/sampling/feature_set.hpp"
#include "cxr/sampling/smote.hpp"
#include "smote_oracle.hpp"

using namespace cxr::sampling;
using cxr::Matrix;

namespace {

Matrix<float> random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  cxr::Rng rng(seed);
  Matrix<float> m(n, d);
  for (auto& v : m.values) v = static_cast<float>(rng.normal());
  return m;
}

FeatureSet random_features(const std::vector<std::size_t>& counts, std::size_t d, std::uint64_t seed) {
  cxr::Rng rng(seed);
  FeatureSet fs;
  fs.features = Matrix<float>(0, d);
  fs.class_names = {"COVID-19", "Normal", "Pneumonia"};
  std::vector<float> row(d);
  // Interleave classes so class membership is not contiguous.
  std::vector<std::size_t> left = counts;
  while (std::any_of(left.begin(), left.end(), [](auto c) { return c > 0; })) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (left[c] == 0) continue;
      --left[c];
      for (auto& v : row) v = static_cast<float>(rng.normal(3.0 * static_cast<double>(c), 1.0));
      fs.features.append_row(row);
      fs.labels.push_back(static_cast<std::uint8_t>(c));
      fs.ids.push_back("img" + std::to_string(fs.labels.size()));
    }
  }
  return fs;
}

}  // namespace

TEST(Knn, OneDimensionalExample) {
  Matrix<float> x(3, 1, std::vector<float>{0.0f, 1.0f, 10.0f});
  EXPECT_EQ(knn_indices(x, 0, 1), (std::vector<std::size_t>{1}));
  EXPECT_EQ(knn_indices(x, 2, 2), (std::vector<std::size_t>{1, 0}));
}

TEST(Knn, DuplicateIsNearest) {
  Matrix<float> x(4, 2, std::vector<float>{1, 1, 5, 5, 1, 1, 2, 2});
  EXPECT_EQ(knn_indices(x, 0, 1), (std::vector<std::size_t>{2}));
}

TEST(Knn, TiesGoToLowerIndex) {
  Matrix<float> x(4, 1, std::vector<float>{0.0f, 1.0f, -1.0f, 1.0f});
  EXPECT_EQ(knn_indices(x, 0, 3), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Knn, MatchesExhaustiveScanForEveryK) {
  const auto x = random_matrix(100, 4, 7);
  for (std::size_t q : {0u, 17u, 99u}) {
    const auto oracle = smote_oracle::brute_force_neighbours(x, q);
    for (std::size_t k = 1; k <= 99; ++k) {
      const auto got = knn_indices(x, q, k);
      ASSERT_EQ(got, std::vector<std::size_t>(oracle.begin(), oracle.begin() + static_cast<long>(k))) << "q=" << q << " k=" << k;
    }
  }
}

TEST(Knn, RejectsTooLargeK) {
  const auto x = random_matrix(5, 2, 1);
  EXPECT_THROW(knn_indices(x, 0, 5), cxr::ArgumentError);
}

TEST(Smote, GrowsToTargetAndKeepsOriginals) {
  const auto x = random_matrix(470, 16, 3);
  const auto out = smote_oversample(x, 1000, 5, 11);
  ASSERT_EQ(out.rows.rows, 1000u);
  EXPECT_TRUE(std::equal(x.values.begin(), x.values.end(), out.rows.values.begin()));
  ASSERT_EQ(out.generators.size(), 530u);
  for (const auto& g : out.generators) {
    ASSERT_LT(g.base, 470u);
    const auto nn = smote_oracle::brute_force_neighbours(x, g.base);
    EXPECT_NE(std::find(nn.begin(), nn.begin() + 5, g.neighbor), nn.begin() + 5);
    EXPECT_EQ(smote_oracle::check_segment(out.rows.row(g.row), x.row(g.base), x.row(g.neighbor), g.gap), "");
  }
}

TEST(Smote, IdenticalRowsStayIdentical) {
  Matrix<float> x(0, 3);
  const std::vector<float> p{0.25f, -1.5f, 7.0f};
  for (int i = 0; i < 6; ++i) x.append_row(p);
  const auto out = smote_oversample(x, 20, 5, 1);
  for (std::size_t r = 0; r < out.rows.rows; ++r)
    EXPECT_TRUE(std::equal(p.begin(), p.end(), out.rows.row(r).begin()));
}

TEST(Smote, TwoPointsLieOnTheirSegment) {
  Matrix<float> x(2, 2, std::vector<float>{0.5f, -2.0f, 3.0f, 4.0f});
  const auto out = smote_oversample(x, 200, 1, 9);
  for (std::size_t r = 2; r < 200; ++r) {
    const auto s = out.rows.row(r);
    bool ok = false;
    for (auto [a, b] : {std::pair{0, 1}, std::pair{1, 0}}) {
      const double u0 = (static_cast<double>(s[0]) - x(a, 0)) / (static_cast<double>(x(b, 0)) - x(a, 0));
      const double u1 = (static_cast<double>(s[1]) - x(a, 1)) / (static_cast<double>(x(b, 1)) - x(a, 1));
      ok |= u0 >= -1e-7 && u0 < 1.0 && std::abs(u0 - u1) < 1e-6;
    }
    EXPECT_TRUE(ok) << "row " << r;
  }
}

TEST(Smote, TinyClassesShrinkK) {
  Matrix<float> one(1, 2, std::vector<float>{1.0f, 2.0f});
  const auto dup = smote_oversample(one, 4, 5, 1);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(dup.rows.row(r)[1], 2.0f);
  const auto three = random_matrix(3, 2, 4);
  const auto out = smote_oversample(three, 30, 5, 2);
  EXPECT_EQ(out.rows.rows, 30u);
  for (const auto& g : out.generators) EXPECT_NE(g.base, g.neighbor);
}

TEST(Smote, NoOpAtTargetAndRejectsDownsampling) {
  const auto x = random_matrix(10, 2, 5);
  const auto out = smote_oversample(x, 10, 5, 1);
  EXPECT_EQ(out.rows, x);
  EXPECT_TRUE(out.generators.empty());
  EXPECT_THROW(smote_oversample(x, 9, 5, 1), cxr::ArgumentError);
}

TEST(Balance, DeskScaleClassCountsBecomeBalanced) {
  const auto fs = random_features({470, 1000, 1000}, 64, 1);
  const auto out = balance_dataset(fs, 1000, 5, 42);
  EXPECT_EQ(out.class_counts(), (std::vector<std::size_t>{1000, 1000, 1000}));
  EXPECT_EQ(out.generators.size(), 530u);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    ASSERT_TRUE(std::equal(fs.features.row(i).begin(), fs.features.row(i).end(), out.features.row(i).begin()));
    ASSERT_EQ(out.labels[i], fs.labels[i]);
  }
  std::set<std::size_t> rows;
  for (const auto& g : out.generators) {
    rows.insert(g.row);
    EXPECT_GE(g.row, fs.size());
    EXPECT_LT(g.base, fs.size());
    EXPECT_EQ(out.labels[g.row], 0);
    EXPECT_EQ(out.labels[g.base], 0);
    EXPECT_EQ(out.labels[g.neighbor], 0);
    EXPECT_EQ(out.ids[g.row], "");
    EXPECT_EQ(smote_oracle::check_segment(out.features.row(g.row), out.features.row(g.base), out.features.row(g.neighbor), g.gap),
              "");
  }
  EXPECT_EQ(rows.size(), 530u);
}

TEST(Balance, AlreadyBalancedIsUnchanged) {
  const auto fs = random_features({20, 20, 20}, 4, 2);
  EXPECT_EQ(balance_dataset(fs, 20, 5, 1), fs);
}

TEST(Balance, SameSeedSameBytes) {
  const auto fs = random_features({30, 50, 45}, 8, 3);
  const auto a = serialize_features(balance_dataset(fs, 60, 5, 7));
  const auto b = serialize_features(balance_dataset(fs, 60, 5, 7));
  const auto c = serialize_features(balance_dataset(fs, 60, 5, 8));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Balance, ClassAboveTargetIsRejected) {
  const auto fs = random_features({30, 50, 45}, 8, 3);
  EXPECT_THROW(balance_dataset(fs, 40, 5, 1), cxr::ArgumentError);
}

TEST(Balance, SyntheticRowsStayInClassBoundingBox) {
  const auto fs = random_features({15, 40, 25}, 6, 4);
  const auto out = balance_dataset(fs, 40, 3, 2);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < fs.dim(); ++j) {
      float lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = 0; i < fs.size(); ++i)
        if (fs.labels[i] == c) {
          lo = std::min(lo, fs.features(i, j));
          hi = std::max(hi, fs.features(i, j));
        }
      for (std::size_t i = fs.size(); i < out.size(); ++i)
        if (out.labels[i] == c) {
          EXPECT_GE(out.features(i, j), lo);
          EXPECT_LE(out.features(i, j), hi);
        }
    }
  }
}

TEST(FeatureFile, RoundTrip) {
  auto fs = balance_dataset(random_features({5, 9, 7}, 3, 5), 9, 2, 1);
  fs.provenance = {{"stage", "balance"}};
  const auto bytes = serialize_features(fs);
  EXPECT_EQ(deserialize_features(bytes), fs);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(deserialize_features(truncated), cxr::FormatError);
  auto bad = bytes;
  bad[3] = '!';
  try {
    deserialize_features(bad);
    FAIL();
  } catch (const cxr::FormatError& e) {
    EXPECT_EQ(e.offset, 0u);
  }
}

TEST(FeatureFile, SubsetReindexesGenerators) {
  const auto fs = balance_dataset(random_features({3, 6, 6}, 2, 6), 6, 2, 1);
  std::vector<std::size_t> all(fs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = fs.size() - 1 - i;
  const auto rev = subset(fs, all);
  ASSERT_EQ(rev.generators.size(), fs.generators.size());
  for (std::size_t g = 0; g < rev.generators.size(); ++g) {
    EXPECT_EQ(rev.generators[g].row, fs.size() - 1 - fs.generators[g].row);
    EXPECT_EQ(rev.generators[g].base, fs.size() - 1 - fs.generators[g].base);
  }
  const std::vector<std::size_t> originals{0, 1, 2, 3};
  EXPECT_TRUE(subset(fs, originals).generators.empty());
}
