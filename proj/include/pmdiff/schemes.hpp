#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "pmdiff/cg.hpp"
#include "pmdiff/diffusivity.hpp"
#include "pmdiff/errors.hpp"
#include "pmdiff/grid.hpp"
#include "pmdiff/metrics.hpp"
#include "pmdiff/operator.hpp"

namespace pmdiff {

enum class SchemeKind {
  Explicit,      ///< u^{n+1} = (I + τA(u^n)) u^n
  SemiImplicit,  ///< (I - τA(u^n)) u^{n+1} = u^n
  PMOriginal,    ///< explicit, half-point one-sided diffusivities
  Regularized,   ///< explicit, diffusivity from the Gaussian-smoothed image
  Gaussian,      ///< explicit heat equation, c ≡ 1
};

inline std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Explicit:
      return "explicit";
    case SchemeKind::SemiImplicit:
      return "semi-implicit";
    case SchemeKind::PMOriginal:
      return "pm-original";
    case SchemeKind::Regularized:
      return "regularized";
    case SchemeKind::Gaussian:
      break;
  }
  return "gaussian";
}

inline SchemeKind parse_scheme_kind(std::string_view name) {
  for (auto kind : {SchemeKind::Explicit, SchemeKind::SemiImplicit, SchemeKind::PMOriginal, SchemeKind::Regularized,
                    SchemeKind::Gaussian}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown scheme '" + std::string(name) +
                    "' (expected explicit|semi-implicit|pm-original|regularized|gaussian)");
}

struct SchemeConfig {
  SchemeKind kind = SchemeKind::Explicit;
  double tau = 0.2;
  /// Gaussian pre-smoothing width in pixels; Regularized only.
  double sigma = 1.0;
  double solver_tolerance = 1e-10;
  /// 0 selects 10·MN.
  std::size_t solver_max_iterations = 0;
  bool enforce_stability_bound = true;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("timestep tau must be positive and finite");
    if (!(solver_tolerance > 0.0 && solver_tolerance < 1.0)) throw ConfigError("solver tolerance must lie in (0, 1)");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
  }
};

/// Largest stable explicit timestep (exclusive) for the 2D five-point stencil.
inline double stability_bound(double dx, double dy) {
  if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("grid spacing must be positive");
  return 1.0 / (2.0 / (dx * dx) + 2.0 / (dy * dy));
}

/// Bound for a concrete grid: an axis without neighbours (a single row or
/// column) contributes no term. A 1×1 grid has no bound.
inline double stability_bound(Extent extent, Spacing spacing) {
  double denom = 0.0;
  if (extent.cols > 1) denom += 2.0 / (spacing.dx * spacing.dx);
  if (extent.rows > 1) denom += 2.0 / (spacing.dy * spacing.dy);
  return denom == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / denom;
}

inline double stability_bound(const ScalarField& field) { return stability_bound(field.extent(), field.spacing()); }

namespace detail {

inline void check_explicit_timestep(const ScalarField& u, const SchemeConfig& config) {
  config.validate();
  if (!config.enforce_stability_bound) return;
  const double bound = stability_bound(u);
  if (!(config.tau < bound)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "timestep tau=%g violates the stability bound tau < %g", config.tau, bound);
    throw ConfigError(buf);
  }
}

inline ScalarField finite_field(const ScalarField& like, std::vector<double> values, std::string_view scheme) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw NumericBlowupError(std::string(scheme) + " step produced a non-finite value at pixel " +
                               std::to_string(k));
    }
  }
  return like.with_values(std::move(values));
}

inline ScalarField forward_euler(const ScalarField& u, const DiffusionOperator& op, double tau,
                                 std::string_view scheme) {
  const auto au = op.apply(u.values());
  std::vector<double> next(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) next[k] = u[k] + tau * au[k];
  return finite_field(u, std::move(next), scheme);
}

}  // namespace detail

inline ScalarField explicit_step(const ScalarField& u, const Diffusivity& model, const SchemeConfig& config) {
  detail::check_explicit_timestep(u, config);
  return detail::forward_euler(u, assemble(u, model), config.tau, "explicit");
}

/// Solves (I - τA(u)) v = u by conjugate gradients, starting from u. Any τ > 0.
inline ScalarField semi_implicit_step(const ScalarField& u, const Diffusivity& model, const SchemeConfig& config) {
  config.validate();
  const auto op = assemble(u, model);
  const double tau = config.tau;
  auto system = [&](std::span<const double> x) {
    auto y = op.apply(x);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[k] - tau * y[k];
    return y;
  };
  const std::size_t max_it = config.solver_max_iterations ? config.solver_max_iterations : 10 * u.size();
  auto result = conjugate_gradient(system, u.values(), std::vector<double>(u.values().begin(), u.values().end()),
                                   config.solver_tolerance, max_it);
  return detail::finite_field(u, std::move(result.x), "semi-implicit");
}

/// Original Perona-Malik update, including the printed 1/(2h²) stencil factor.
/// Uses the same timestep restriction as the explicit scheme.
inline ScalarField pm_original_step(const ScalarField& u, const Diffusivity& model, const SchemeConfig& config) {
  detail::check_explicit_timestep(u, config);
  return detail::forward_euler(u, assemble_half_point(u, model), config.tau, "pm-original");
}

/// Explicit step whose diffusivity is evaluated on G_σ * u; the operator still acts on u.
inline ScalarField regularized_step(const ScalarField& u, const Diffusivity& model, const SchemeConfig& config) {
  detail::check_explicit_timestep(u, config);
  const auto smoothed = convolve_gaussian(u, config.sigma);
  const auto op = assemble_from_diffusivity(diffusivity_field(smoothed, model));
  return detail::forward_euler(u, op, config.tau, "regularized");
}

/// Explicit heat-equation step (c ≡ 1).
inline ScalarField gaussian_step(const ScalarField& u, const SchemeConfig& config) {
  detail::check_explicit_timestep(u, config);
  return detail::forward_euler(u, assemble_laplacian(u.extent(), u.spacing()), config.tau, "gaussian");
}

inline ScalarField step(const ScalarField& u, const Diffusivity& model, const SchemeConfig& config) {
  switch (config.kind) {
    case SchemeKind::Explicit:
      return explicit_step(u, model, config);
    case SchemeKind::SemiImplicit:
      return semi_implicit_step(u, model, config);
    case SchemeKind::PMOriginal:
      return pm_original_step(u, model, config);
    case SchemeKind::Regularized:
      return regularized_step(u, model, config);
    case SchemeKind::Gaussian:
      break;
  }
  return gaussian_step(u, config);
}

/// Rejects a configuration that `step` would reject on this grid, before any work is done.
inline void check_timestep(const ScalarField& u, const SchemeConfig& config) {
  config.validate();
  if (config.kind != SchemeKind::SemiImplicit) detail::check_explicit_timestep(u, config);
}

/// Exact heat-equation solution at time t: convolution with a Gaussian of
/// standard deviation √(2t), in pixel units.
inline ScalarField heat_closed_form(const ScalarField& u0, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("heat_closed_form: time must be finite and >= 0");
  return convolve_gaussian(u0, std::sqrt(2.0 * t));
}

struct RunResult {
  ScalarField field;
  MetricsLog log;
};

struct RunOptions {
  /// When set, every log record carries d(reference, u_n).
  const ScalarField* reference = nullptr;
};

namespace detail {

template <typename E>
[[noreturn]] void rethrow_at(const E& e, std::size_t iteration) {
  const std::string what = "iteration " + std::to_string(iteration) + ": " + e.what();
  if constexpr (std::is_same_v<E, SolverError>) {
    throw SolverError(what, e.residual(), e.iterations());
  } else {
    throw E(what);
  }
}

}  // namespace detail

/**
 * Applies the configured step `n_iters` times, logging field statistics after
 * every step (iteration 1..n). The observer is called as `observer(n, u_n)`
 * after each step; if it returns bool, `false` ends the run early.
 *
 * Step errors are rethrown with the failing iteration number prefixed.
 */
template <typename Observer>
RunResult run(const ScalarField& u0, const Diffusivity& model, const SchemeConfig& config, std::size_t n_iters,
              Observer&& observer, const RunOptions& options = {}) {
  config.validate();
  RunResult result{u0, {}};
  for (std::size_t n = 1; n <= n_iters; ++n) {
    try {
      result.field = step(result.field, model, config);
    } catch (const NumericBlowupError& e) {
      detail::rethrow_at(e, n);
    } catch (const SolverError& e) {
      detail::rethrow_at(e, n);
    } catch (const ConfigError& e) {
      detail::rethrow_at(e, n);
    }
    try {
      result.log.record(n, result.field, options.reference);
    } catch (const DomainError& e) {
      // Finite samples whose statistics overflow are still a blowup.
      detail::rethrow_at(NumericBlowupError(e.what()), n);
    }
    if constexpr (std::is_same_v<std::invoke_result_t<Observer&, std::size_t, const ScalarField&>, bool>) {
      if (!observer(n, std::as_const(result.field))) break;
    } else {
      observer(n, std::as_const(result.field));
    }
  }
  return result;
}

inline RunResult run(const ScalarField& u0, const Diffusivity& model, const SchemeConfig& config,
                     std::size_t n_iters) {
  return run(u0, model, config, n_iters, [](std::size_t, const ScalarField&) {});
}

}  // namespace pmdiff
