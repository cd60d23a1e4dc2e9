#include "cxr/imaging/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cxr::imaging {
namespace {

struct Sample {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// Pixel-center source coordinate, clamped to the source extent.
Sample source_coordinate(std::size_t dst, std::size_t src_extent, std::size_t dst_extent) {
  const double scale = static_cast<double>(src_extent) / static_cast<double>(dst_extent);
  double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(src_extent - 1));
  const auto lo = static_cast<std::size_t>(std::floor(s));
  const std::size_t hi = std::min(lo + 1, src_extent - 1);
  return {lo, hi, s - static_cast<double>(lo)};
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) throw ArgumentError("resize target dimensions must be >= 1");
  GrayImage out(out_w, out_h);
  std::vector<Sample> xs(out_w);
  for (std::size_t x = 0; x < out_w; ++x) xs[x] = source_coordinate(x, img.width(), out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Sample sy = source_coordinate(y, img.height(), out_h);
    for (std::size_t x = 0; x < out_w; ++x) {
      const Sample& sx = xs[x];
      const double top = (1.0 - sx.frac) * img.at(sx.lo, sy.lo) + sx.frac * img.at(sx.hi, sy.lo);
      const double bottom = (1.0 - sx.frac) * img.at(sx.lo, sy.hi) + sx.frac * img.at(sx.hi, sy.hi);
      out.at(x, y) = round_to_pixel((1.0 - sy.frac) * top + sy.frac * bottom);
    }
  }
  return out;
}

GrayImage median_filter(const GrayImage& img, std::size_t radius) {
  if (radius == 0) throw ArgumentError("median radius must be >= 1");
  const long r = static_cast<long>(radius);
  const std::size_t side = 2 * radius + 1;
  std::vector<std::uint8_t> window(side * side);
  const auto mid = window.begin() + static_cast<long>(window.size() / 2);
  GrayImage out(img.width(), img.height());
  for (long y = 0; y < static_cast<long>(img.height()); ++y) {
    for (long x = 0; x < static_cast<long>(img.width()); ++x) {
      std::size_t k = 0;
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx) window[k++] = img.clamped(x + dx, y + dy);
      std::nth_element(window.begin(), mid, window.end());
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = *mid;
    }
  }
  return out;
}

Histogram histogram(std::span<const std::uint8_t> pixels) {
  Histogram h{};
  for (auto v : pixels) ++h[v];
  return h;
}

namespace {

Lut identity_lut() {
  Lut lut{};
  for (std::size_t v = 0; v < 256; ++v) lut[v] = static_cast<std::uint8_t>(v);
  return lut;
}

}  // namespace

Lut equalization_lut(const Histogram& hist) {
  Lut lut{};
  std::uint64_t total = 0;
  std::size_t occupied = 0;
  for (auto c : hist) {
    total += c;
    occupied += c != 0;
  }
  if (occupied <= 1) return identity_lut();
  std::uint64_t cdf = 0;
  std::uint64_t cdf_min = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    cdf += hist[v];
    if (cdf_min == 0) cdf_min = cdf;
    if (cdf == 0) {
      lut[v] = 0;
      continue;
    }
    // Exact integer round-half-up of (cdf - cdf_min) * 255 / (total - cdf_min).
    const std::uint64_t den = total - cdf_min;
    lut[v] = static_cast<std::uint8_t>(((cdf - cdf_min) * 255 * 2 + den) / (2 * den));
  }
  return lut;
}

GrayImage histogram_equalize(const GrayImage& img) {
  const Lut lut = equalization_lut(histogram(img.pixels()));
  GrayImage out = img;
  for (auto& v : out.pixels()) v = lut[v];
  return out;
}

void clip_histogram(Histogram& hist, std::uint64_t clip) {
  std::uint64_t excess = 0;
  for (auto& c : hist) {
    if (c > clip) {
      excess += c - clip;
      c = clip;
    }
  }
  const std::uint64_t batch = excess / 256;
  std::uint64_t residual = excess % 256;
  for (auto& c : hist) c += batch;
  if (residual != 0) {
    const std::size_t step = std::max<std::size_t>(256 / residual, 1);
    for (std::size_t i = 0; i < 256 && residual > 0; i += step, --residual) ++hist[i];
  }
}

namespace {

struct TileAxis {
  std::vector<std::size_t> start;  // tiles + 1 boundaries
  std::vector<double> center;
};

TileAxis make_axis(std::size_t extent, std::size_t tiles) {
  TileAxis axis;
  for (std::size_t t = 0; t <= tiles; ++t) axis.start.push_back(t * extent / tiles);
  for (std::size_t t = 0; t < tiles; ++t)
    axis.center.push_back(static_cast<double>(axis.start[t] + axis.start[t + 1] - 1) / 2.0);
  return axis;
}

// Neighbouring tile pair and weight of the second tile for a pixel coordinate.
Sample tile_weight(const TileAxis& axis, std::size_t p) {
  const double x = static_cast<double>(p);
  const std::size_t n = axis.center.size();
  if (x <= axis.center.front()) return {0, 0, 0.0};
  if (x >= axis.center.back()) return {n - 1, n - 1, 0.0};
  std::size_t i = 0;
  while (axis.center[i + 1] <= x) ++i;
  return {i, i + 1, (x - axis.center[i]) / (axis.center[i + 1] - axis.center[i])};
}

}  // namespace

GrayImage clahe(const GrayImage& img, const ClaheParams& params) {
  if (params.tiles_x == 0 || params.tiles_y == 0) throw ArgumentError("CLAHE tile counts must be >= 1");
  if (!(params.clip_limit >= 1.0)) throw ArgumentError("CLAHE clip limit must be >= 1");
  const std::size_t tx = std::min(params.tiles_x, img.width());
  const std::size_t ty = std::min(params.tiles_y, img.height());
  const TileAxis ax = make_axis(img.width(), tx);
  const TileAxis ay = make_axis(img.height(), ty);

  std::vector<Lut> luts(tx * ty);
  for (std::size_t j = 0; j < ty; ++j) {
    for (std::size_t i = 0; i < tx; ++i) {
      Histogram h{};
      for (std::size_t y = ay.start[j]; y < ay.start[j + 1]; ++y)
        for (std::size_t x = ax.start[i]; x < ax.start[i + 1]; ++x) ++h[img.at(x, y)];
      const auto occupied = std::count_if(h.begin(), h.end(), [](auto c) { return c != 0; });
      if (occupied > 1 && std::isfinite(params.clip_limit)) {
        const double area = static_cast<double>((ax.start[i + 1] - ax.start[i]) * (ay.start[j + 1] - ay.start[j]));
        const auto clip = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(params.clip_limit * area / 256.0));
        clip_histogram(h, clip);
      }
      // Single-level tiles keep the identity mapping even after clipping.
      luts[j * tx + i] = occupied > 1 ? equalization_lut(h) : identity_lut();
    }
  }

  GrayImage out(img.width(), img.height());
  std::vector<Sample> wx(img.width());
  for (std::size_t x = 0; x < img.width(); ++x) wx[x] = tile_weight(ax, x);
  for (std::size_t y = 0; y < img.height(); ++y) {
    const Sample sy = tile_weight(ay, y);
    for (std::size_t x = 0; x < img.width(); ++x) {
      const Sample& sx = wx[x];
      const auto v = img.at(x, y);
      const double top = (1.0 - sx.frac) * luts[sy.lo * tx + sx.lo][v] + sx.frac * luts[sy.lo * tx + sx.hi][v];
      const double bottom = (1.0 - sx.frac) * luts[sy.hi * tx + sx.lo][v] + sx.frac * luts[sy.hi * tx + sx.hi][v];
      out.at(x, y) = round_to_pixel((1.0 - sy.frac) * top + sy.frac * bottom);
    }
  }
  return out;
}

std::vector<double> gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian sigma must be > 0");
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (auto& w : kernel) w /= sum;

  const long w = static_cast<long>(img.width());
  const long h = static_cast<long>(img.height());
  auto clampi = [](long v, long n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
  std::vector<double> horizontal(img.size());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long i = -radius; i <= radius; ++i)
        acc += kernel[static_cast<std::size_t>(i + radius)] * img.clamped(x + i, y);
      horizontal[static_cast<std::size_t>(y * w + x)] = acc;
    }
  std::vector<double> out(img.size());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long i = -radius; i <= radius; ++i)
        acc += kernel[static_cast<std::size_t>(i + radius)] * horizontal[static_cast<std::size_t>(clampi(y + i, h) * w + x)];
      out[static_cast<std::size_t>(y * w + x)] = acc;
    }
  return out;
}

GrayImage unsharp(const GrayImage& img, const UnsharpKernel& kernel, double amount) {
  if (!(amount >= 0.0)) throw ArgumentError("unsharp amount must be >= 0");
  GrayImage out(img.width(), img.height());
  if (const auto* g = std::get_if<GaussianBlur>(&kernel)) {
    const auto blurred = gaussian_blur(img, g->sigma);
    const auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
      dst[i] = round_to_pixel(src[i] + amount * (src[i] - blurred[i]));
    return out;
  }
  for (long y = 0; y < static_cast<long>(img.height()); ++y) {
    for (long x = 0; x < static_cast<long>(img.width()); ++x) {
      const double c = img.clamped(x, y);
      const double lap = img.clamped(x - 1, y) + img.clamped(x + 1, y) + img.clamped(x, y - 1) +
                         img.clamped(x, y + 1) - 4.0 * c;
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = round_to_pixel(c - amount * lap);
    }
  }
  return out;
}

GrayImage apply_mask(const GrayImage& img, const BitMask& mask) {
  if (img.width() != mask.width() || img.height() != mask.height())
    throw ArgumentError("mask dimensions do not match image");
  GrayImage out = img;
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (!mask[i]) px[i] = 0;
  return out;
}

}  // namespace cxr::imaging
