#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cxr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller passed a value outside an operation's precondition.
struct ArgumentError : Error {
  using Error::Error;
};

/// Malformed serialized input. `offset` is the byte position where decoding failed.
struct FormatError : Error {
  FormatError(const std::string& detail, std::size_t offset)
      : Error(detail + " (at byte offset " + std::to_string(offset) + ")"), detail(detail), offset(offset) {}
  std::string detail;
  std::size_t offset;
};

/// Network architecture inconsistent with its input geometry.
struct SpecError : Error {
  SpecError(const std::string& what, std::size_t layer)
      : Error("layer " + std::to_string(layer) + ": " + what), layer(layer) {}
  std::size_t layer;
};

/// A protocol between calls was violated, e.g. backward with a stale cache.
struct ContractError : Error {
  using Error::Error;
};

/// Document validation failure listing every offending item.
struct ValidationError : Error {
  ValidationError(const std::string& what, std::vector<std::string> offenders)
      : Error(compose(what, offenders)), offenders(std::move(offenders)) {}
  std::vector<std::string> offenders;

 private:
  static std::string compose(const std::string& what, const std::vector<std::string>& items) {
    std::string s = what;
    for (const auto& item : items) s += "\n  - " + item;
    return s;
  }
};

}  // namespace cxr
