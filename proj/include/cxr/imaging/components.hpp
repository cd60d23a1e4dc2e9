#pragma once

#include <cstddef>
#include <vector>

#include "cxr/imaging/image.hpp"

namespace cxr::imaging {

struct ComponentLabels {
  /// 0 for background, 1..count for components in raster order of first pixel.
  std::vector<std::size_t> labels;
  std::vector<std::size_t> sizes;  // sizes[c-1] is the pixel count of component c
  std::size_t count() const { return sizes.size(); }
};

/// 4-connected labeling of the true pixels.
ComponentLabels label_components(const BitMask& mask);

/// Keeps the `keep` largest 4-connected components. Equal sizes are ordered by
/// first pixel in raster order.
BitMask keep_largest_components(const BitMask& mask, std::size_t keep);

}  // namespace cxr::imaging
