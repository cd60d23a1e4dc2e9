#include "cxr/imaging/pgm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace cxr::imaging {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t read_uint(const char* field) {
    skip_separators();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 30)) throw FormatError(std::string("PGM ") + field + " too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size()) throw FormatError(std::string("PGM header truncated before ") + field, pos_);
      throw FormatError(std::string("PGM ") + field + " is not a decimal integer", pos_);
    }
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("not a binary PGM: magic must be P5", 0);
  HeaderReader reader(bytes);
  reader.advance(2);
  if (reader.pos() < bytes.size() && !std::isspace(bytes[reader.pos()]) && bytes[reader.pos()] != '#')
    throw FormatError("missing separator after PGM magic", reader.pos());
  const std::size_t width = reader.read_uint("width");
  const std::size_t height = reader.read_uint("height");
  reader.skip_separators();
  const std::size_t maxval_offset = reader.pos();
  const std::size_t maxval = reader.read_uint("maxval");
  if (width == 0 || height == 0) throw FormatError("PGM dimensions must be >= 1", maxval_offset);
  if (maxval == 0 || maxval > 255) throw FormatError("PGM maxval must be in [1, 255]", maxval_offset);
  if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()]))
    throw FormatError("PGM header must end with a single whitespace byte", reader.pos());
  reader.advance(1);

  const std::size_t payload = reader.pos();
  const std::size_t area = width * height;
  if (bytes.size() - payload < area)
    throw FormatError("PGM payload truncated: expected " + std::to_string(area) + " bytes, found " +
                          std::to_string(bytes.size() - payload),
                      bytes.size());

  std::vector<std::uint8_t> data(bytes.begin() + static_cast<long>(payload),
                                 bytes.begin() + static_cast<long>(payload + area));
  if (maxval != 255) {
    for (std::size_t i = 0; i < area; ++i) {
      if (data[i] > maxval) throw FormatError("PGM sample exceeds maxval", payload + i);
      data[i] = static_cast<std::uint8_t>((data[i] * 255 * 2 + maxval) / (2 * maxval));
    }
  }
  return GrayImage(width, height, std::move(data));
}

std::vector<std::uint8_t> save_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return load_pgm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail, e.offset);
  }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  const auto bytes = save_pgm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cxr::imaging
