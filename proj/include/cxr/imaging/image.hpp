#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cxr/errors.hpp"

namespace cxr::imaging {

/// 8-bit grayscale raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : width_(width), height_(height), data_(checked_area(width, height), fill) {}
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_area(width, height))
      throw ArgumentError("GrayImage data length does not equal width*height");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }

  /// Replicated-border access.
  std::uint8_t clamped(long x, long y) const {
    x = x < 0 ? 0 : (x >= static_cast<long>(width_) ? static_cast<long>(width_) - 1 : x);
    y = y < 0 ? 0 : (y >= static_cast<long>(height_) ? static_cast<long>(height_) - 1 : y);
    return data_[static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)];
  }

  std::span<const std::uint8_t> pixels() const { return data_; }
  std::span<std::uint8_t> pixels() { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static std::size_t checked_area(std::size_t w, std::size_t h) {
    if (w == 0 || h == 0) throw ArgumentError("image dimensions must be >= 1");
    return w * h;
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Row-major binary mask. Entries are 0 or 1.
class BitMask {
 public:
  BitMask() = default;
  BitMask(std::size_t width, std::size_t height, bool fill = false)
      : width_(width), height_(height), data_(width * height, fill ? 1 : 0) {}

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool at(std::size_t x, std::size_t y) const { return data_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v) { data_[y * width_ + x] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return data_[i] != 0; }
  void set(std::size_t i, bool v) { data_[i] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : data_) n += v;
    return n;
  }

  /// Mask from an image: true where intensity >= threshold.
  static BitMask from_image(const GrayImage& img, std::uint8_t threshold = 128);
  /// 0/255 rendering for persistence as PGM.
  GrayImage to_image() const;

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Nonnegative rounding used by every raster operation: clamp to [0,255], then
/// round half up.
inline std::uint8_t round_to_pixel(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(static_cast<int>(v + 0.5));
}

}  // namespace cxr::imaging
