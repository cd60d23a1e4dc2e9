#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <variant>

#include "cxr/imaging/image.hpp"

namespace cxr::imaging {

/// Bilinear resampling with pixel-center alignment.
GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h);

/// Median over the (2r+1)^2 window with replicated borders.
GrayImage median_filter(const GrayImage& img, std::size_t radius = 1);

using Histogram = std::array<std::uint64_t, 256>;
using Lut = std::array<std::uint8_t, 256>;

Histogram histogram(std::span<const std::uint8_t> pixels);

/// Equalization table for a histogram of `total` samples:
/// h(v) = round((cdf(v) - cdf_min) / (total - cdf_min) * 255), with cdf_min the
/// smallest nonzero cdf. A histogram with a single occupied level maps every
/// value to itself.
Lut equalization_lut(const Histogram& hist);

GrayImage histogram_equalize(const GrayImage& img);

struct ClaheParams {
  std::size_t tiles_x = 8;
  std::size_t tiles_y = 8;
  /// Multiple of the uniform bin height (tile pixels / 256). Infinity disables clipping.
  double clip_limit = 2.0;
};

/// Contrast-limited adaptive equalization. Tile counts larger than the image
/// extent are reduced to one tile per pixel.
GrayImage clahe(const GrayImage& img, const ClaheParams& params = {});

/// Clips `hist` at `clip` counts and spreads the excess over all bins in one pass.
void clip_histogram(Histogram& hist, std::uint64_t clip);

struct GaussianBlur {
  double sigma = 1.0;
};
struct LaplacianBlur {};
using UnsharpKernel = std::variant<GaussianBlur, LaplacianBlur>;

/// Gaussian: out = img + amount*(img - blur(img)).
/// Laplacian: out = img - amount*lap(img), 4-neighbour kernel.
GrayImage unsharp(const GrayImage& img, const UnsharpKernel& kernel, double amount);

/// Separable Gaussian blur, kernel radius ceil(3 sigma), replicated borders.
/// Returned unrounded so callers can combine it in floating point.
std::vector<double> gaussian_blur(const GrayImage& img, double sigma);

/// Zeroes every pixel whose mask entry is false.
GrayImage apply_mask(const GrayImage& img, const BitMask& mask);

}  // namespace cxr::imaging
