#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cxr/imaging/image.hpp"

namespace cxr::imaging {

/// Decodes a binary (P5) PGM. Header tokens may be separated by any whitespace
/// and `#` comments. A maxval below 255 is rescaled to the full 8-bit range.
/// Throws FormatError naming the failing byte offset.
GrayImage load_pgm(std::span<const std::uint8_t> bytes);

/// Canonical encoding: "P5\n<w> <h>\n255\n" followed by the raw raster.
std::vector<std::uint8_t> save_pgm(const GrayImage& img);

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace cxr::imaging
