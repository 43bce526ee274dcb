#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmdiff/diffusivity.hpp"
#include "pmdiff/errors.hpp"
#include "pmdiff/grid.hpp"

namespace pmdiff {

struct MatrixEntry {
  std::size_t col = 0;
  double value = 0.0;
};

/**
 * Sparse MN×MN operator of the semidiscrete system du/dt = A(u)u.
 *
 * Compressed row storage, columns sorted within each row. Operators built by
 * `assemble` are symmetric with nonnegative off-diagonals and a diagonal equal
 * to the negated off-diagonal sum. `from_rows` accepts arbitrary matrices so
 * the property checks can be exercised on counterexamples.
 */
class DiffusionOperator {
public:
  DiffusionOperator() = default;

  /// Rows need not be sorted; duplicate columns are rejected.
  static DiffusionOperator from_rows(std::vector<std::vector<MatrixEntry>> rows) {
    DiffusionOperator op;
    op.row_start_.reserve(rows.size() + 1);
    op.row_start_.push_back(0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto& row = rows[k];
      std::sort(row.begin(), row.end(), [](const MatrixEntry& a, const MatrixEntry& b) { return a.col < b.col; });
      for (std::size_t n = 0; n < row.size(); ++n) {
        if (row[n].col >= rows.size()) {
          throw IndexError("column " + std::to_string(row[n].col) + " outside operator of size " +
                           std::to_string(rows.size()));
        }
        if (n > 0 && row[n].col == row[n - 1].col) {
          throw DimensionError("duplicate column " + std::to_string(row[n].col) + " in row " + std::to_string(k));
        }
        op.entries_.push_back(row[n]);
      }
      op.row_start_.push_back(op.entries_.size());
    }
    return op;
  }

  std::size_t dimension() const noexcept { return row_start_.empty() ? 0 : row_start_.size() - 1; }
  std::size_t nonzeros() const noexcept { return entries_.size(); }

  std::span<const MatrixEntry> row(std::size_t k) const {
    return {entries_.data() + row_start_[k], row_start_[k + 1] - row_start_[k]};
  }

  /// Stored value at (k, l), or 0 if the position is structurally empty.
  double entry(std::size_t k, std::size_t l) const {
    const auto r = row(k);
    const auto it = std::lower_bound(r.begin(), r.end(), l,
                                     [](const MatrixEntry& e, std::size_t c) { return e.col < c; });
    return (it != r.end() && it->col == l) ? it->value : 0.0;
  }

  double diagonal(std::size_t k) const { return entry(k, k); }

  /// y = A·u, each row summed left to right by column index.
  std::vector<double> apply(std::span<const double> u) const {
    if (u.size() != dimension()) {
      throw DimensionError("vector of length " + std::to_string(u.size()) + " applied to operator of size " +
                           std::to_string(dimension()));
    }
    std::vector<double> y(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      double acc = 0.0;
      for (const auto& e : row(k)) acc += e.value * u[e.col];
      y[k] = acc;
    }
    return y;
  }

private:
  std::vector<std::size_t> row_start_;
  std::vector<MatrixEntry> entries_;
};

/// Central-difference |∇u|² at a pixel; the outer neighbours are mirrored at the border.
inline double gradient_magnitude_sq(const ScalarField& field, std::size_t i, std::size_t j) {
  linear_index(i, j, field.extent());
  const auto si = static_cast<std::ptrdiff_t>(i);
  const auto sj = static_cast<std::ptrdiff_t>(j);
  const double gx = (mirror_sample(field, si, sj + 1) - mirror_sample(field, si, sj - 1)) / (2.0 * field.spacing().dx);
  const double gy = (mirror_sample(field, si + 1, sj) - mirror_sample(field, si - 1, sj)) / (2.0 * field.spacing().dy);
  return gx * gx + gy * gy;
}

/// Per-pixel c(|∇u|²).
inline ScalarField diffusivity_field(const ScalarField& field, const Diffusivity& model) {
  std::vector<double> c(field.size());
  for (std::size_t i = 0; i < field.rows(); ++i) {
    for (std::size_t j = 0; j < field.cols(); ++j) {
      c[i * field.cols() + j] = model.evaluate(gradient_magnitude_sq(field, i, j));
    }
  }
  return field.with_values(std::move(c));
}

namespace detail {

// Builds a five-point operator from per-edge weights. `weight(k, l, axis)` is
// called once per unordered adjacent pair with k < l and must be >= 0.
template <typename EdgeWeight>
DiffusionOperator assemble_from_edges(Extent extent, EdgeWeight&& weight) {
  const std::size_t n = extent.size();
  const std::size_t cols = extent.cols;
  // Right (k+1) and down (k+N) edge weights; left/up come from the mirrored pair.
  std::vector<double> right(n, 0.0);
  std::vector<double> down(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k % cols;
    if (j + 1 < cols) right[k] = weight(k, k + 1, Axis::X);
    if (k + cols < n) down[k] = weight(k, k + cols, Axis::Y);
  }

  std::vector<std::vector<MatrixEntry>> rows(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k % cols;
    auto& row = rows[k];
    row.reserve(5);
    if (k >= cols) row.push_back({k - cols, down[k - cols]});
    if (j > 0) row.push_back({k - 1, right[k - 1]});
    row.push_back({k, 0.0});
    if (j + 1 < cols) row.push_back({k + 1, right[k]});
    if (k + cols < n) row.push_back({k + cols, down[k]});

    double off = 0.0;
    for (const auto& e : row) {
      if (e.col != k) off += e.value;
    }
    for (auto& e : row) {
      if (e.col == k) e.value = -off;
    }
  }
  return DiffusionOperator::from_rows(std::move(rows));
}

}  // namespace detail

/**
 * Operator from a precomputed diffusivity field: the coupling between x-adjacent
 * pixels is (c_k + c_l) / (2Δx²), between y-adjacent pixels (c_k + c_l) / (2Δy²).
 * Border pixels simply lack the outside neighbour (Neumann boundary).
 */
inline DiffusionOperator assemble_from_diffusivity(const ScalarField& c) {
  const double wx = 1.0 / (2.0 * c.spacing().dx * c.spacing().dx);
  const double wy = 1.0 / (2.0 * c.spacing().dy * c.spacing().dy);
  return detail::assemble_from_edges(c.extent(), [&](std::size_t k, std::size_t l, Axis axis) {
    return (c[k] + c[l]) * (axis == Axis::X ? wx : wy);
  });
}

inline DiffusionOperator assemble(const ScalarField& field, const Diffusivity& model) {
  return assemble_from_diffusivity(diffusivity_field(field, model));
}

/// Same as `assemble` but with explicit spacing overriding the field's own.
inline DiffusionOperator assemble(const ScalarField& field, const Diffusivity& model, double dx, double dy) {
  if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("grid spacing must be positive");
  const ScalarField respaced(field.extent(), std::vector<double>(field.values().begin(), field.values().end()),
                             Spacing{dx, dy});
  return assemble(respaced, model);
}

/// Discrete Laplacian with the same stencil weights as `assemble` for c ≡ 1.
inline DiffusionOperator assemble_laplacian(Extent extent, Spacing spacing) {
  return assemble_from_diffusivity(ScalarField::constant(extent, 1.0, spacing));
}

/**
 * Operator of the original Perona-Malik discretisation: half-point diffusivities
 * from one-sided differences, c_{k,l} = c(((u_l - u_k)/h)²), with the stencil
 * factor 1/(2h²). The result has the same structure (and properties) as
 * `assemble`.
 */
inline DiffusionOperator assemble_half_point(const ScalarField& field, const Diffusivity& model) {
  const double dx = field.spacing().dx;
  const double dy = field.spacing().dy;
  return detail::assemble_from_edges(field.extent(), [&](std::size_t k, std::size_t l, Axis axis) {
    const double h = axis == Axis::X ? dx : dy;
    const double g = (field[l] - field[k]) / h;
    return model.evaluate(g * g) / (2.0 * h * h);
  });
}

/// Sampled, truncated and renormalised 1D Gaussian.
class GaussianKernel {
public:
  explicit GaussianKernel(double sigma) : sigma_(sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("Gaussian sigma must be finite and >= 0");
    radius_ = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    weights_.assign(2 * radius_ + 1, 0.0);
    if (radius_ == 0) {
      weights_[0] = 1.0;
      return;
    }
    double total = 0.0;
    for (std::size_t n = 0; n < weights_.size(); ++n) {
      const double x = static_cast<double>(n) - static_cast<double>(radius_);
      weights_[n] = std::exp(-x * x / (2.0 * sigma * sigma));
      total += weights_[n];
    }
    for (auto& w : weights_) w /= total;
  }

  double sigma() const noexcept { return sigma_; }
  std::size_t radius() const noexcept { return radius_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double center_weight() const noexcept { return weights_[radius_]; }

private:
  double sigma_;
  std::size_t radius_ = 0;
  std::vector<double> weights_;
};

namespace detail {

// Half-sample symmetric extension (u_{-1} = u_0, u_n = u_{n-1}), any overreach.
// Unlike the one-pixel whole-sample mirror this keeps convolution mass-preserving.
inline std::size_t reflect_index(std::ptrdiff_t idx, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = idx % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

}  // namespace detail

/// Separable convolution, along rows first and then along columns, with symmetric border extension.
inline ScalarField convolve_gaussian(const ScalarField& field, const GaussianKernel& kernel) {
  if (kernel.radius() == 0) return field;
  const std::size_t rows = field.rows();
  const std::size_t cols = field.cols();
  const auto w = kernel.weights();
  const auto r = static_cast<std::ptrdiff_t>(kernel.radius());

  // A length-1 axis is left untouched; its reflected samples are all the same pixel.
  std::vector<double> tmp(field.values().begin(), field.values().end());
  for (std::size_t i = 0; i < rows && cols > 1; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -r; t <= r; ++t) {
        acc += w[static_cast<std::size_t>(t + r)] *
               field(i, detail::reflect_index(static_cast<std::ptrdiff_t>(j) + t, cols));
      }
      tmp[i * cols + j] = acc;
    }
  }
  if (rows == 1) return field.with_values(std::move(tmp));
  std::vector<double> out(field.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -r; t <= r; ++t) {
        acc += w[static_cast<std::size_t>(t + r)] *
               tmp[detail::reflect_index(static_cast<std::ptrdiff_t>(i) + t, rows) * cols + j];
      }
      out[i * cols + j] = acc;
    }
  }
  return field.with_values(std::move(out));
}

inline ScalarField convolve_gaussian(const ScalarField& field, double sigma) {
  return convolve_gaussian(field, GaussianKernel(sigma));
}

}  // namespace pmdiff
