#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "pmdiff/errors.hpp"

namespace pmdiff {

enum class DiffusivityKind {
  Rational,     ///< c(s²) = 1 / (1 + s²/λ²)
  Exponential,  ///< c(s²) = exp(-s² / (2λ²))
};

enum class Regime { Forward, Backward, Critical };

inline std::string_view to_string(DiffusivityKind kind) {
  return kind == DiffusivityKind::Rational ? "rational" : "exponential";
}

inline std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Forward:
      return "forward";
    case Regime::Backward:
      return "backward";
    case Regime::Critical:
      break;
  }
  return "critical";
}

inline DiffusivityKind parse_diffusivity_kind(std::string_view name) {
  if (name == "rational") return DiffusivityKind::Rational;
  if (name == "exponential") return DiffusivityKind::Exponential;
  throw ConfigError("unknown diffusivity '" + std::string(name) + "' (expected rational|exponential)");
}

/**
 * Edge-stopping diffusivity c(s²) with contrast parameter λ.
 *
 * Gradients with |s| < λ are diffused forward, |s| > λ backward: the flux
 * Φ(s) = s·c(s²) rises up to s = λ and falls beyond it.
 */
class Diffusivity {
public:
  Diffusivity(DiffusivityKind kind, double lambda) : kind_(kind), lambda_(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw ConfigError("lambda must be positive and finite");
    }
  }

  static Diffusivity rational(double lambda) { return {DiffusivityKind::Rational, lambda}; }
  static Diffusivity exponential(double lambda) { return {DiffusivityKind::Exponential, lambda}; }

  DiffusivityKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }

  /// c(s²), takes the squared gradient magnitude. Result in (0, 1].
  double evaluate(double s_sq) const {
    if (!std::isfinite(s_sq) || s_sq < 0.0) {
      throw DomainError("diffusivity argument must be finite and nonnegative");
    }
    return evaluate_unchecked(s_sq);
  }

  /// Φ(s) = s·c(s²).
  double flux(double s) const {
    require_finite(s);
    return s * evaluate_unchecked(s * s);
  }

  /// Closed-form Φ'(s) = c(s²) + 2s²c'(s²).
  double flux_derivative(double s) const {
    require_finite(s);
    const double r = s * s / (lambda_ * lambda_);
    if (kind_ == DiffusivityKind::Rational) {
      const double d = 1.0 + r;
      return (1.0 - r) / (d * d);
    }
    return (1.0 - r) * std::exp(-0.5 * r);
  }

  /// Sign of Φ'(s); |Φ'| within 1e-12·max(1, |Φ'(0)|) counts as Critical.
  Regime regime(double s) const {
    const double d = flux_derivative(s);
    const double band = 1e-12 * std::max(1.0, std::abs(flux_derivative(0.0)));
    if (std::abs(d) <= band) return Regime::Critical;
    return d > 0.0 ? Regime::Forward : Regime::Backward;
  }

  bool operator==(const Diffusivity&) const = default;

  // Hot-loop variant; callers guarantee s_sq is finite and >= 0.
  double evaluate_unchecked(double s_sq) const noexcept {
    const double r = s_sq / (lambda_ * lambda_);
    if (kind_ == DiffusivityKind::Rational) return 1.0 / (1.0 + r);
    return std::exp(-0.5 * r);
  }

private:
  static void require_finite(double s) {
    if (!std::isfinite(s)) throw DomainError("gradient value must be finite");
  }

  DiffusivityKind kind_;
  double lambda_;
};

}  // namespace pmdiff
