#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pmdiff/errors.hpp"

namespace pmdiff {

struct CgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace detail

/**
 * Unpreconditioned conjugate gradients for an SPD operator given as a callable
 * `matvec(std::span<const double>) -> std::vector<double>`.
 *
 * Converged when ||b - Mx|| <= tolerance·||b||. A zero right-hand side returns
 * the zero vector. Throws SolverError if `max_iterations` is exhausted.
 */
template <typename MatVec>
CgResult conjugate_gradient(MatVec&& matvec, std::span<const double> b, std::vector<double> x0, double tolerance,
                            std::size_t max_iterations) {
  const std::size_t n = b.size();
  if (x0.size() != n) throw DimensionError("initial guess has wrong length");

  const double b_norm = std::sqrt(detail::dot(b, b));
  if (b_norm == 0.0) return {std::vector<double>(n, 0.0), 0, 0.0};

  std::vector<double> x = std::move(x0);
  std::vector<double> r(n);
  {
    const auto mx = matvec(std::span<const double>(x));
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - mx[k];
  }
  std::vector<double> p = r;
  double rr = detail::dot(r, r);
  const double target = tolerance * b_norm;

  std::size_t it = 0;
  while (std::sqrt(rr) > target) {
    if (it == max_iterations) {
      throw SolverError("conjugate gradient did not converge in " + std::to_string(max_iterations) +
                            " iterations (relative residual " + std::to_string(std::sqrt(rr) / b_norm) + ")",
                        std::sqrt(rr) / b_norm, it);
    }
    const auto mp = matvec(std::span<const double>(p));
    const double pmp = detail::dot(p, mp);
    if (!(pmp > 0.0)) {
      throw SolverError("conjugate gradient breakdown: operator not positive definite", std::sqrt(rr) / b_norm, it);
    }
    const double alpha = rr / pmp;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * mp[k];
    }
    const double rr_next = detail::dot(r, r);
    const double beta = rr_next / rr;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    rr = rr_next;
    ++it;
  }
  return {std::move(x), it, std::sqrt(rr) / b_norm};
}

}  // namespace pmdiff
