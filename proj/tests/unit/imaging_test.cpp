#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <string>

#include "cxr/imaging/components.hpp"
#include "cxr/imaging/image.hpp"
#include "cxr/imaging/ops.hpp"
#include "cxr/imaging/pgm.hpp"
#include "cxr/rng.hpp"

using namespace cxr::imaging;

namespace {

GrayImage random_image(std::size_t w, std::size_t h, std::uint64_t seed, int levels = 256) {
  cxr::Rng rng(seed);
  GrayImage img(w, h);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(levels)));
  return img;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// Scalar per-pixel CLAHE reference: recomputes the four surrounding tile
// mappings from scratch for every pixel.
std::uint8_t clahe_reference_pixel(const GrayImage& img, std::size_t tiles_x, std::size_t tiles_y, double clip_limit,
                                   std::size_t px, std::size_t py) {
  auto bounds = [](std::size_t extent, std::size_t tiles, std::size_t t) {
    return std::pair<std::size_t, std::size_t>{t * extent / tiles, (t + 1) * extent / tiles};
  };
  auto mapping = [&](std::size_t ti, std::size_t tj, int value) -> double {
    auto [x0, x1] = bounds(img.width(), tiles_x, ti);
    auto [y0, y1] = bounds(img.height(), tiles_y, tj);
    long long hist[256] = {};
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) hist[img.at(x, y)]++;
    int levels = 0;
    for (long long c : hist) levels += c > 0;
    if (levels <= 1) return value;
    const long long area = static_cast<long long>((x1 - x0) * (y1 - y0));
    long long limit = static_cast<long long>(std::floor(clip_limit * static_cast<double>(area) / 256.0));
    if (limit < 1) limit = 1;
    long long excess = 0;
    for (long long& c : hist)
      if (c > limit) {
        excess += c - limit;
        c = limit;
      }
    for (long long& c : hist) c += excess / 256;
    long long left = excess % 256;
    if (left > 0) {
      const long long step = std::max<long long>(256 / left, 1);
      for (long long b = 0; b < 256 && left > 0; b += step, --left) hist[b]++;
    }
    long long cdf_v = 0, cdf_min = 0, total = 0;
    for (int b = 0; b < 256; ++b) {
      total += hist[b];
      if (b <= value) cdf_v += hist[b];
      if (cdf_min == 0) cdf_min = total;
    }
    if (cdf_v == 0) return 0.0;
    const double exact = static_cast<double>(cdf_v - cdf_min) * 255.0 / static_cast<double>(total - cdf_min);
    // Integer round half up.
    return static_cast<double>(((cdf_v - cdf_min) * 510 + (total - cdf_min)) / (2 * (total - cdf_min))) +
           0.0 * exact;
  };
  auto locate = [](std::size_t extent, std::size_t tiles, std::size_t p, std::size_t& a, std::size_t& b, double& f) {
    std::vector<double> centers;
    for (std::size_t t = 0; t < tiles; ++t) {
      const double lo = static_cast<double>(t * extent / tiles);
      const double hi = static_cast<double>((t + 1) * extent / tiles);
      centers.push_back((lo + hi - 1.0) / 2.0);
    }
    const double x = static_cast<double>(p);
    a = b = 0;
    f = 0.0;
    if (x <= centers.front()) return;
    if (x >= centers.back()) {
      a = b = tiles - 1;
      return;
    }
    for (std::size_t t = 0; t + 1 < tiles; ++t)
      if (centers[t] <= x && x < centers[t + 1]) {
        a = t;
        b = t + 1;
        f = (x - centers[t]) / (centers[t + 1] - centers[t]);
        return;
      }
  };
  std::size_t ax, bx, ay, by;
  double fx, fy;
  locate(img.width(), tiles_x, px, ax, bx, fx);
  locate(img.height(), tiles_y, py, ay, by, fy);
  const int v = img.at(px, py);
  const double top = (1 - fx) * mapping(ax, ay, v) + fx * mapping(bx, ay, v);
  const double bottom = (1 - fx) * mapping(ax, by, v) + fx * mapping(bx, by, v);
  const double value = (1 - fy) * top + fy * bottom;
  return static_cast<std::uint8_t>(std::floor(std::clamp(value, 0.0, 255.0) + 0.5));
}

}  // namespace

TEST(Pgm, DecodesHeaderWithComments) {
  auto bytes = bytes_of("P5 # comment\n2 # w\n2\n255\n");
  for (std::uint8_t v : {0, 128, 255, 7}) bytes.push_back(v);
  const GrayImage img = load_pgm(bytes);
  ASSERT_EQ(img.width(), 2u);
  ASSERT_EQ(img.height(), 2u);
  EXPECT_EQ(img.at(0, 0), 0);
  EXPECT_EQ(img.at(1, 0), 128);
  EXPECT_EQ(img.at(0, 1), 255);
  EXPECT_EQ(img.at(1, 1), 7);
}

TEST(Pgm, CanonicalEncoding) {
  const auto bytes = save_pgm(GrayImage(1, 1, 0));
  auto expected = bytes_of("P5\n1 1\n255\n");
  expected.push_back(0);
  EXPECT_EQ(bytes, expected);
}

TEST(Pgm, RoundTripAndCanonicalReserialization) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cxr::Rng rng(seed);
    const GrayImage img = random_image(1 + rng.below(17), 1 + rng.below(13), seed);
    const auto bytes = save_pgm(img);
    EXPECT_EQ(load_pgm(bytes), img);
    EXPECT_EQ(save_pgm(load_pgm(bytes)), bytes);
  }
  auto loose = bytes_of("P5\n#c\n  3\t1\n255\n");
  for (std::uint8_t v : {1, 2, 3}) loose.push_back(v);
  auto canonical = bytes_of("P5\n3 1\n255\n");
  for (std::uint8_t v : {1, 2, 3}) canonical.push_back(v);
  EXPECT_EQ(save_pgm(load_pgm(loose)), canonical);
}

TEST(Pgm, Errors) {
  auto truncated = bytes_of("P5\n2 2\n255\n");
  truncated.push_back(1);
  EXPECT_THROW(load_pgm(truncated), cxr::FormatError);
  EXPECT_THROW(load_pgm(bytes_of("P2\n1 1\n255\n0")), cxr::FormatError);
  try {
    load_pgm(bytes_of("P5\n1 1\n300\n0"));
    FAIL();
  } catch (const cxr::FormatError& e) {
    EXPECT_EQ(e.offset, 7u);
  }
  EXPECT_THROW(load_pgm(bytes_of("P5\n1 1")), cxr::FormatError);
}

TEST(Pgm, SmallMaxvalIsRescaled) {
  auto bytes = bytes_of("P5\n2 1\n15\n");
  bytes.push_back(15);
  bytes.push_back(0);
  const GrayImage img = load_pgm(bytes);
  EXPECT_EQ(img.at(0, 0), 255);
  EXPECT_EQ(img.at(1, 0), 0);
}

TEST(Resize, IdentityAndConstant) {
  const GrayImage img = random_image(7, 5, 3);
  EXPECT_EQ(resize_bilinear(img, 7, 5), img);
  const GrayImage c(9, 4, 77);
  EXPECT_EQ(resize_bilinear(c, 3, 11), GrayImage(3, 11, 77));
  EXPECT_EQ(resize_bilinear(c, 20, 20), GrayImage(20, 20, 77));
}

TEST(Resize, PixelCenterAlignment) {
  const GrayImage img(2, 2, std::vector<std::uint8_t>{0, 0, 255, 255});
  const GrayImage out = resize_bilinear(img, 1, 1);
  EXPECT_EQ(out.at(0, 0), 128);
  EXPECT_THROW(resize_bilinear(img, 0, 3), cxr::ArgumentError);
}

TEST(Median, ImpulseAndConstant) {
  GrayImage img(5, 5, 0);
  img.at(2, 2) = 255;
  EXPECT_EQ(median_filter(img, 1), GrayImage(5, 5, 0));
  EXPECT_EQ(median_filter(GrayImage(4, 6, 9), 2), GrayImage(4, 6, 9));
}

TEST(Median, RefilteringNeverIncreasesChange) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GrayImage prev = median_filter(random_image(12, 10, seed), 1);
    int last_change = 256;
    for (int pass = 0; pass < 4; ++pass) {
      const GrayImage next = median_filter(prev, 1);
      int change = 0;
      for (std::size_t i = 0; i < next.size(); ++i)
        change = std::max(change, std::abs(int(next.pixels()[i]) - int(prev.pixels()[i])));
      EXPECT_LE(change, last_change);
      last_change = change;
      prev = next;
    }
  }
}

TEST(HistogramEqualize, HandComputedCases) {
  const GrayImage spread(2, 2, std::vector<std::uint8_t>{0, 0, 255, 255});
  EXPECT_EQ(histogram_equalize(spread), spread);
  const GrayImage img(2, 2, std::vector<std::uint8_t>{10, 10, 20, 30});
  EXPECT_EQ(histogram_equalize(img), GrayImage(2, 2, std::vector<std::uint8_t>{0, 0, 128, 255}));
  EXPECT_EQ(histogram_equalize(GrayImage(3, 3, 42)), GrayImage(3, 3, 42));
}

TEST(HistogramEqualize, MonotoneAndFullRange) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const GrayImage img = random_image(9, 7, seed, 2 + static_cast<int>(seed % 50));
    const GrayImage out = histogram_equalize(img);
    const Lut lut = equalization_lut(histogram(img.pixels()));
    int prev = -1;
    const Histogram h = histogram(img.pixels());
    for (int v = 0; v < 256; ++v) {
      if (h[v] == 0) continue;
      EXPECT_GE(lut[v], prev);
      prev = lut[v];
    }
    const auto [lo, hi] = std::minmax_element(out.pixels().begin(), out.pixels().end());
    if (h[img.pixels()[0]] != img.size()) {
      EXPECT_EQ(*lo, 0);
      EXPECT_EQ(*hi, 255);
    }
  }
}

TEST(Clahe, ConstantImageUnchanged) {
  const GrayImage c(32, 32, 90);
  EXPECT_EQ(clahe(c, {8, 8, 2.0}), c);
}

TEST(Clahe, SingleTileUnboundedEqualsHistogramEqualization) {
  const double inf = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    cxr::Rng rng(seed + 100);
    const GrayImage img = random_image(1 + rng.below(40), 1 + rng.below(40), seed, 1 + static_cast<int>(rng.below(256)));
    EXPECT_EQ(clahe(img, {1, 1, inf}), histogram_equalize(img)) << "seed " << seed;
    EXPECT_EQ(clahe(img, {1, 1, 1e9}), histogram_equalize(img)) << "seed " << seed;
  }
}

TEST(Clahe, MatchesScalarReference) {
  const GrayImage img = random_image(64, 64, 2024);
  const GrayImage out = clahe(img, {8, 8, 2.0});
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x)
      ASSERT_EQ(out.at(x, y), clahe_reference_pixel(img, 8, 8, 2.0, x, y)) << x << "," << y;
  // Uneven tiling.
  const GrayImage odd = random_image(37, 23, 5, 60);
  const GrayImage odd_out = clahe(odd, {5, 3, 3.0});
  for (std::size_t y = 0; y < odd.height(); ++y)
    for (std::size_t x = 0; x < odd.width(); ++x)
      ASSERT_EQ(odd_out.at(x, y), clahe_reference_pixel(odd, 5, 3, 3.0, x, y)) << x << "," << y;
}

TEST(ClipHistogram, PreservesTotal) {
  Histogram h{};
  h[3] = 1000;
  h[200] = 17;
  clip_histogram(h, 20);
  std::uint64_t total = 0;
  for (auto c : h) total += c;
  EXPECT_EQ(total, 1017u);
}

TEST(Unsharp, IdentityCases) {
  const GrayImage c(6, 6, 120);
  EXPECT_EQ(unsharp(c, GaussianBlur{1.5}, 2.0), c);
  EXPECT_EQ(unsharp(c, LaplacianBlur{}, 2.0), c);
  const GrayImage img = random_image(8, 8, 11);
  EXPECT_EQ(unsharp(img, GaussianBlur{1.0}, 0.0), img);
  EXPECT_EQ(unsharp(img, LaplacianBlur{}, 0.0), img);
}

TEST(Unsharp, LaplacianHandComputed) {
  GrayImage img(3, 3, 0);
  img.at(1, 1) = 100;
  const GrayImage out = unsharp(img, LaplacianBlur{}, 1.0);
  EXPECT_EQ(out.at(1, 1), 255);
  EXPECT_EQ(out.at(1, 0), 0);
  EXPECT_EQ(out.at(0, 1), 0);
  EXPECT_EQ(out.at(2, 1), 0);
  EXPECT_EQ(out.at(1, 2), 0);
}

TEST(Mask, Application) {
  const GrayImage img = random_image(10, 6, 4);
  EXPECT_EQ(apply_mask(img, BitMask(10, 6, true)), img);
  EXPECT_EQ(apply_mask(img, BitMask(10, 6, false)), GrayImage(10, 6, 0));
  EXPECT_THROW(apply_mask(img, BitMask(6, 10, true)), cxr::ArgumentError);
  cxr::Rng rng(9);
  BitMask m(10, 6);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, rng.bernoulli(0.5));
  const GrayImage out = apply_mask(img, m);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) {
      EXPECT_EQ(out.pixels()[i], 0);
    }
    zeros += out.pixels()[i] == 0;
  }
  EXPECT_GE(zeros, m.size() - m.count());
}

TEST(Properties, RangeAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GrayImage img = random_image(13, 9, seed);
    const GrayImage ops[] = {resize_bilinear(img, 5, 17), median_filter(img, 1), histogram_equalize(img),
                             clahe(img, {3, 2, 2.0}), unsharp(img, GaussianBlur{0.8}, 1.5),
                             unsharp(img, LaplacianBlur{}, 0.7)};
    const GrayImage again[] = {resize_bilinear(img, 5, 17), median_filter(img, 1), histogram_equalize(img),
                               clahe(img, {3, 2, 2.0}), unsharp(img, GaussianBlur{0.8}, 1.5),
                               unsharp(img, LaplacianBlur{}, 0.7)};
    for (std::size_t i = 0; i < std::size(ops); ++i) EXPECT_EQ(ops[i], again[i]);
  }
}

TEST(Properties, TranslationCovarianceOnInterior) {
  // Shift by (2,1) and compare interior pixels away from the border.
  const GrayImage big = random_image(24, 20, 77);
  GrayImage shifted(24, 20);
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x < 24; ++x) shifted.at(x, y) = big.clamped(long(x) - 2, long(y) - 1);
  auto check = [&](const GrayImage& a, const GrayImage& b, std::size_t margin) {
    for (std::size_t y = margin + 1; y + margin < 20; ++y)
      for (std::size_t x = margin + 2; x + margin < 24; ++x) ASSERT_EQ(b.at(x, y), a.at(x - 2, y - 1));
  };
  check(median_filter(big, 1), median_filter(shifted, 1), 2);
  check(unsharp(big, LaplacianBlur{}, 0.5), unsharp(shifted, LaplacianBlur{}, 0.5), 2);
  check(unsharp(big, GaussianBlur{0.7}, 1.0), unsharp(shifted, GaussianBlur{0.7}, 1.0), 4);
  check(resize_bilinear(big, 24, 20), resize_bilinear(shifted, 24, 20), 1);
}

TEST(Components, KeepsTwoLargest) {
  BitMask m(20, 20);
  auto fill = [&](std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    for (std::size_t y = y0; y < y0 + h; ++y)
      for (std::size_t x = x0; x < x0 + w; ++x) m.set(x, y, true);
  };
  fill(0, 0, 10, 5);   // 50
  fill(12, 0, 8, 5);   // 40
  fill(0, 10, 3, 1);   // 3
  const ComponentLabels cc = label_components(m);
  ASSERT_EQ(cc.count(), 3u);
  const BitMask kept = keep_largest_components(m, 2);
  EXPECT_EQ(kept.count(), 90u);
  EXPECT_FALSE(kept.at(0, 10));
  EXPECT_TRUE(kept.at(0, 0));
  EXPECT_TRUE(kept.at(19, 4));
  EXPECT_EQ(keep_largest_components(BitMask(5, 5), 2).count(), 0u);
}

TEST(Components, DiagonalPixelsAreSeparate) {
  BitMask m(3, 3);
  m.set(0, 0, true);
  m.set(1, 1, true);
  EXPECT_EQ(label_components(m).count(), 2u);
}
