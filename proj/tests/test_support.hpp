#pragma once

// Helpers shared by the test binaries. The oracles here are deliberately
// written without the library's operator or solver code.

#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "pmdiff/grid.hpp"
#include "pmdiff/operator.hpp"

namespace pmdiff::testutil {

inline ScalarField random_field(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0,
                                double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return ScalarField({rows, cols}, std::move(v));
}

inline ScalarField checkerboard(std::size_t rows, std::size_t cols, double lo, double hi) {
  std::vector<double> v(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) v[i * cols + j] = ((i + j) % 2 == 0) ? lo : hi;
  }
  return ScalarField({rows, cols}, std::move(v));
}

using DenseMatrix = std::vector<std::vector<double>>;

inline DenseMatrix to_dense(const DiffusionOperator& op) {
  const std::size_t n = op.dimension();
  DenseMatrix a(n, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& e : op.row(k)) a[k][e.col] = e.value;
  }
  return a;
}

/// Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(DenseMatrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

/// Hand-written semidiscrete right-hand side: pairwise fluxes over in-grid neighbours,
/// with c from explicit central differences. Independent of `assemble`.
template <typename C>
std::vector<double> reference_rhs(const ScalarField& u, C&& c_of_sq) {
  const std::size_t rows = u.rows();
  const std::size_t cols = u.cols();
  const double dx = u.spacing().dx;
  const double dy = u.spacing().dy;
  auto at = [&](long i, long j) {
    // whole-sample mirror
    if (i < 0) i = rows > 1 ? 1 : 0;
    if (i >= static_cast<long>(rows)) i = rows > 1 ? static_cast<long>(rows) - 2 : 0;
    if (j < 0) j = cols > 1 ? 1 : 0;
    if (j >= static_cast<long>(cols)) j = cols > 1 ? static_cast<long>(cols) - 2 : 0;
    return u(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  std::vector<double> c(rows * cols);
  for (long i = 0; i < static_cast<long>(rows); ++i) {
    for (long j = 0; j < static_cast<long>(cols); ++j) {
      const double gx = (at(i, j + 1) - at(i, j - 1)) / (2 * dx);
      const double gy = (at(i + 1, j) - at(i - 1, j)) / (2 * dy);
      c[i * cols + j] = c_of_sq(gx * gx + gy * gy);
    }
  }
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t k = i * cols + j;
      double acc = 0.0;
      if (j > 0) acc += (c[k] + c[k - 1]) / (2 * dx * dx) * (u[k - 1] - u[k]);
      if (j + 1 < cols) acc += (c[k] + c[k + 1]) / (2 * dx * dx) * (u[k + 1] - u[k]);
      if (i > 0) acc += (c[k] + c[k - cols]) / (2 * dy * dy) * (u[k - cols] - u[k]);
      if (i + 1 < rows) acc += (c[k] + c[k + cols]) / (2 * dy * dy) * (u[k + cols] - u[k]);
      out[k] = acc;
    }
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace pmdiff::testutil
