#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmdiff/errors.hpp"

namespace pmdiff {

/// Height and width of a grid, in pixels.
struct Extent {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const Extent&) const = default;
};

/// Physical grid spacing. Pixel units by default.
struct Spacing {
  double dx = 1.0;
  double dy = 1.0;

  bool operator==(const Spacing&) const = default;
};

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;

  bool operator==(const Pixel&) const = default;
};

enum class Axis { X, Y };

/**
 * Row-major 2D grid of real intensities.
 *
 * Row index i runs along y (height M), column index j along x (width N).
 * A 1D signal is a field with a single row, so it lies along x and uses dx.
 * Values must be finite; the constructor rejects NaN/Inf.
 */
class ScalarField {
public:
  ScalarField() = default;

  ScalarField(Extent extent, std::vector<double> values, Spacing spacing = {})
      : extent_(extent), spacing_(spacing), values_(std::move(values)) {
    if (extent_.rows == 0 || extent_.cols == 0) {
      throw DimensionError("field dimensions must be positive");
    }
    if (values_.size() != extent_.size()) {
      throw DimensionError("field has " + std::to_string(values_.size()) + " values, expected " +
                           std::to_string(extent_.size()));
    }
    if (!(spacing_.dx > 0.0) || !(spacing_.dy > 0.0) || !std::isfinite(spacing_.dx) ||
        !std::isfinite(spacing_.dy)) {
      throw ConfigError("grid spacing must be positive and finite");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        throw DomainError("non-finite value at index " + std::to_string(k));
      }
    }
  }

  static ScalarField constant(Extent extent, double value, Spacing spacing = {}) {
    return ScalarField(extent, std::vector<double>(extent.size(), value), spacing);
  }

  /// 1×N field from a signal.
  static ScalarField signal(std::vector<double> values, double dx = 1.0) {
    const Extent extent{1, values.size()};
    return ScalarField(extent, std::move(values), Spacing{dx, dx});
  }

  const Extent& extent() const noexcept { return extent_; }
  std::size_t rows() const noexcept { return extent_.rows; }
  std::size_t cols() const noexcept { return extent_.cols; }
  std::size_t size() const noexcept { return values_.size(); }
  const Spacing& spacing() const noexcept { return spacing_; }

  std::span<const double> values() const& noexcept { return values_; }
  /// Temporaries hand over their storage, so `for (v : f().values())` is safe.
  std::vector<double> values() && noexcept { return std::move(values_); }

  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * extent_.cols + j]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  double at(std::size_t i, std::size_t j) const {
    if (i >= extent_.rows || j >= extent_.cols) {
      throw IndexError("pixel (" + std::to_string(i) + "," + std::to_string(j) + ") outside " +
                       std::to_string(extent_.rows) + "x" + std::to_string(extent_.cols) + " field");
    }
    return (*this)(i, j);
  }

  /// Same extent and spacing, new values.
  ScalarField with_values(std::vector<double> values) const {
    return ScalarField(extent_, std::move(values), spacing_);
  }

  bool operator==(const ScalarField&) const = default;

private:
  Extent extent_{};
  Spacing spacing_{};
  std::vector<double> values_;
};

/// Row-major vector index k = i·N + j.
inline std::size_t linear_index(std::size_t i, std::size_t j, Extent extent) {
  if (i >= extent.rows || j >= extent.cols) {
    throw IndexError("pixel (" + std::to_string(i) + "," + std::to_string(j) + ") outside " +
                     std::to_string(extent.rows) + "x" + std::to_string(extent.cols) + " grid");
  }
  return i * extent.cols + j;
}

inline Pixel pixel_of(std::size_t k, Extent extent) {
  if (k >= extent.size()) {
    throw IndexError("vector index " + std::to_string(k) + " outside grid of size " +
                     std::to_string(extent.size()));
  }
  return {k / extent.cols, k % extent.cols};
}

/// In-grid neighbours of a pixel along one axis; at most two.
class NeighborSet {
public:
  void push(Pixel p) noexcept { items_[count_++] = p; }

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  const Pixel* begin() const noexcept { return items_.data(); }
  const Pixel* end() const noexcept { return items_.data() + count_; }
  const Pixel& operator[](std::size_t n) const noexcept { return items_[n]; }

private:
  std::array<Pixel, 2> items_{};
  std::size_t count_ = 0;
};

/// Neighbours along X vary the column index j, neighbours along Y the row index i.
/// Boundary pixels get fewer neighbours, which is how the Neumann condition enters
/// the semidiscrete sums.
inline NeighborSet neighbors(std::size_t i, std::size_t j, Axis axis, Extent extent) {
  linear_index(i, j, extent);
  NeighborSet out;
  if (axis == Axis::X) {
    if (j > 0) out.push({i, j - 1});
    if (j + 1 < extent.cols) out.push({i, j + 1});
  } else {
    if (i > 0) out.push({i - 1, j});
    if (i + 1 < extent.rows) out.push({i + 1, j});
  }
  return out;
}

namespace detail {

// Reflects an index overreaching by at most one pixel: -1 -> 1, n -> n-2.
// Degenerates to clamping when the axis is too short to reflect.
inline std::size_t mirror_index(std::ptrdiff_t idx, std::size_t n) {
  const auto len = static_cast<std::ptrdiff_t>(n);
  if (idx < -1 || idx > len) {
    throw IndexError("mirror overreach beyond one pixel (index " + std::to_string(idx) + ")");
  }
  if (idx == -1) idx = len > 1 ? 1 : 0;
  if (idx == len) idx = len > 1 ? len - 2 : 0;
  return static_cast<std::size_t>(idx);
}

}  // namespace detail

/// Field value with one-pixel mirror reflection outside the grid,
/// u_{-1,j} = u_{1,j} and u_{M,j} = u_{M-2,j}.
inline double mirror_sample(const ScalarField& field, std::ptrdiff_t i, std::ptrdiff_t j) {
  return field(detail::mirror_index(i, field.rows()), detail::mirror_index(j, field.cols()));
}

}  // namespace pmdiff
