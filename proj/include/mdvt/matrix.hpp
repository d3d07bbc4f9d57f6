#pragma once

#include <cassert>
#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace mdvt {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t r) {
    assert(r < rows);
    return {data.data() + r * cols, cols};
  }
  std::span<const double> row(std::size_t r) const {
    assert(r < rows);
    return {data.data() + r * cols, cols};
  }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool operator==(const Matrix&) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

}  // namespace mdvt
