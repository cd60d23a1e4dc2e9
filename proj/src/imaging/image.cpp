#include "cxr/imaging/image.hpp"

namespace cxr::imaging {

BitMask BitMask::from_image(const GrayImage& img, std::uint8_t threshold) {
  BitMask m(img.width(), img.height());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) m.set(i, px[i] >= threshold);
  return m;
}

GrayImage BitMask::to_image() const {
  GrayImage img(width_, height_);
  auto px = img.pixels();
  for (std::size_t i = 0; i < data_.size(); ++i) px[i] = data_[i] ? 255 : 0;
  return img;
}

}  // namespace cxr::imaging
