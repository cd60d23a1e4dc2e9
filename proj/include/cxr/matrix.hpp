#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cxr/errors.hpp"

namespace cxr {

/// Row-major dense matrix.
template <class T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T{0}) : rows(r), cols(c), values(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<T> v) : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != r * c) throw ArgumentError("matrix data does not match its dimensions");
  }

  std::span<T> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const T> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  T& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  void append_row(std::span<const T> r) {
    if (rows == 0 && cols == 0) cols = r.size();
    if (r.size() != cols) throw ArgumentError("row length does not match matrix width");
    values.insert(values.end(), r.begin(), r.end());
    ++rows;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace cxr
