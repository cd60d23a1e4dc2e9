#include "cxr/imaging/components.hpp"

#include <algorithm>
#include <numeric>

namespace cxr::imaging {

ComponentLabels label_components(const BitMask& mask) {
  ComponentLabels out;
  out.labels.assign(mask.size(), 0);
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || out.labels[start] != 0) continue;
    const std::size_t label = out.sizes.size() + 1;
    std::size_t size = 0;
    stack.push_back(start);
    out.labels[start] = label;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const std::size_t x = p % w;
      const std::size_t y = p / w;
      auto visit = [&](std::size_t q) {
        if (mask[q] && out.labels[q] == 0) {
          out.labels[q] = label;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    out.sizes.push_back(size);
  }
  return out;
}

BitMask keep_largest_components(const BitMask& mask, std::size_t keep) {
  const ComponentLabels cc = label_components(mask);
  std::vector<std::size_t> order(cc.count());
  std::iota(order.begin(), order.end(), 0);
  // Labels are assigned in raster order, so stable sorting keeps the
  // first-pixel tie rule.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cc.sizes[a] > cc.sizes[b]; });
  std::vector<bool> kept(cc.count() + 1, false);
  for (std::size_t i = 0; i < std::min(keep, order.size()); ++i) kept[order[i] + 1] = true;
  BitMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out.set(i, kept[cc.labels[i]]);
  return out;
}

}  // namespace cxr::imaging
