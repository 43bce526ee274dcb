#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pmdiff/diffusivity.hpp"
#include "pmdiff/errors.hpp"
#include "pmdiff/grid.hpp"
#include "pmdiff/metrics.hpp"
#include "pmdiff/operator.hpp"
#include "pmdiff/schemes.hpp"

namespace pmdiff {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

/**
 * Standard normal variates from a 64-bit Mersenne Twister via Box-Muller.
 *
 * Both the engine and the transform are fully specified, so a seed yields the
 * same sequence on every platform (std::normal_distribution does not).
 */
class NormalSource {
public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = open_unit();
    const double u2 = open_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

private:
  // Uniform on (0, 1] with 53 random bits.
  double open_unit() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Adds N(0, (mean/snr)²) noise; SNR is the mean signal over the noise standard
/// deviation. The result is not clamped.
inline ScalarField add_gaussian_noise(const ScalarField& field, double snr, std::uint64_t seed) {
  if (!(snr > 0.0)) throw DomainError("SNR must be positive");
  const double mu = mean(field);
  if (!(mu > 0.0)) throw DomainError("SNR is undefined for a field with non-positive mean");
  const double sd = mu / snr;
  NormalSource normal(seed);
  std::vector<double> out(field.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = field[k] + sd * normal.next();
  return field.with_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Report formatting
// ---------------------------------------------------------------------------

/// Compact scientific notation with one decimal: 0.0e0, 1.2e-5, 3.4e2.
inline std::string format_sci(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1e", value);
  std::string s(buf);
  const auto e = s.find('e');
  std::string mant = s.substr(0, e);
  std::string exp = s.substr(e + 1);
  std::string sign;
  if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) {
    if (exp[0] == '-') sign = "-";
    exp.erase(0, 1);
  }
  exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
  if (exp == "0") sign.clear();
  return mant + "e" + sign + exp;
}

inline std::string format_exact(double value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

inline const char* pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------
// Operator properties
// ---------------------------------------------------------------------------

struct OperatorReport {
  // P1 is only filled in by check_continuity; verify_operator_properties leaves it empty.
  struct Continuity {
    bool pass = false;
    double max_change_coarse = 0.0;  // ||A(u+εv) - A(u)||_max at the largest ε
    double max_change_fine = 0.0;    // same at the smallest ε
    double eps_coarse = 0.0;
    double eps_fine = 0.0;
  };
  std::optional<Continuity> p1;

  bool p2_pass = false;
  double max_asymmetry = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> asymmetric_pair;

  bool p3_pass = false;
  double max_abs_row_sum = 0.0;
  std::size_t worst_row = 0;

  bool p4_pass = false;
  double min_off_diagonal = std::numeric_limits<double>::infinity();

  bool p5_pass = false;
  std::size_t components = 0;

  bool all_pass() const { return (!p1 || p1->pass) && p2_pass && p3_pass && p4_pass && p5_pass; }

  /// One line per property, `P2: PASS max_asym=0.0e0` style.
  std::string to_text() const {
    std::string out;
    if (p1) {
      out += "P1: " + std::string(pass_fail(p1->pass)) + " max_change=" + format_sci(p1->max_change_coarse) +
             "@eps=" + format_sci(p1->eps_coarse) + " max_change=" + format_sci(p1->max_change_fine) +
             "@eps=" + format_sci(p1->eps_fine) + "\n";
    }
    out += "P2: " + std::string(pass_fail(p2_pass)) + " max_asym=" + format_sci(max_asymmetry);
    if (asymmetric_pair) {
      out += " at=(" + std::to_string(asymmetric_pair->first) + "," + std::to_string(asymmetric_pair->second) + ")";
    }
    out += "\n";
    out += "P3: " + std::string(pass_fail(p3_pass)) + " max_row_sum=" + format_sci(max_abs_row_sum) + "\n";
    out += "P4: " + std::string(pass_fail(p4_pass)) + " min_offdiag=" + format_sci(min_off_diagonal) + "\n";
    out += "P5: " + std::string(pass_fail(p5_pass)) + " components=" + std::to_string(components) + "\n";
    return out;
  }

  /// Machine-readable `key=value` lines with full precision.
  std::string to_key_values() const {
    std::string out;
    if (p1) {
      out += "p1.pass=" + std::to_string(p1->pass) + "\n";
      out += "p1.max_change_coarse=" + format_exact(p1->max_change_coarse) + "\n";
      out += "p1.max_change_fine=" + format_exact(p1->max_change_fine) + "\n";
    }
    out += "p2.pass=" + std::to_string(p2_pass) + "\np2.max_asym=" + format_exact(max_asymmetry) + "\n";
    out += "p3.pass=" + std::to_string(p3_pass) + "\np3.max_row_sum=" + format_exact(max_abs_row_sum) + "\n";
    out += "p4.pass=" + std::to_string(p4_pass) + "\np4.min_offdiag=" + format_exact(min_off_diagonal) + "\n";
    out += "p5.pass=" + std::to_string(p5_pass) + "\np5.components=" + std::to_string(components) + "\n";
    return out;
  }
};

namespace detail {

// Row sum in the order the diagonal was formed: off-diagonals left to right, then the diagonal.
inline double row_sum(const DiffusionOperator& op, std::size_t k) {
  double off = 0.0;
  double diag = 0.0;
  for (const auto& e : op.row(k)) {
    if (e.col == k) {
      diag = e.value;
    } else {
      off += e.value;
    }
  }
  return off + diag;
}

// Nodes reachable from `start` following nonzero off-diagonal entries.
inline std::vector<bool> reachable(const std::vector<std::vector<std::size_t>>& adjacency, std::size_t start) {
  std::vector<bool> seen(adjacency.size(), false);
  std::queue<std::size_t> queue;
  seen[start] = true;
  queue.push(start);
  while (!queue.empty()) {
    const auto k = queue.front();
    queue.pop();
    for (auto l : adjacency[k]) {
      if (!seen[l]) {
        seen[l] = true;
        queue.push(l);
      }
    }
  }
  return seen;
}

}  // namespace detail

/**
 * Checks symmetry, zero row sums, nonnegative off-diagonals and irreducibility.
 *
 * `components` counts connected components of the undirected nonzero pattern.
 * P5 additionally requires every index to reach and be reached from index 0
 * along nonzero entries, which is irreducibility for non-symmetric input too.
 */
inline OperatorReport verify_operator_properties(const DiffusionOperator& op) {
  OperatorReport report;
  const std::size_t n = op.dimension();

  std::vector<std::vector<std::size_t>> forward(n);
  std::vector<std::vector<std::size_t>> backward(n);
  std::vector<std::vector<std::size_t>> undirected(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& e : op.row(k)) {
      if (e.col == k) continue;
      const double asym = std::abs(e.value - op.entry(e.col, k));
      if (asym > report.max_asymmetry) {
        report.max_asymmetry = asym;
        report.asymmetric_pair = std::pair{k, e.col};
      }
      report.min_off_diagonal = std::min(report.min_off_diagonal, e.value);
      if (e.value != 0.0) {
        forward[k].push_back(e.col);
        backward[e.col].push_back(k);
        undirected[k].push_back(e.col);
        undirected[e.col].push_back(k);
      }
    }
    const double rs = std::abs(detail::row_sum(op, k));
    if (rs > report.max_abs_row_sum) {
      report.max_abs_row_sum = rs;
      report.worst_row = k;
    }
  }
  // Structurally absent off-diagonals are zeros, which satisfy P4.
  if (n > 1 && !std::isfinite(report.min_off_diagonal)) report.min_off_diagonal = 0.0;

  report.p2_pass = report.max_asymmetry == 0.0;
  report.p3_pass = report.max_abs_row_sum == 0.0;
  report.p4_pass = !(report.min_off_diagonal < 0.0);

  std::vector<bool> labelled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    if (labelled[k]) continue;
    ++report.components;
    const auto seen = detail::reachable(undirected, k);
    for (std::size_t l = 0; l < n; ++l) labelled[l] = labelled[l] || seen[l];
  }
  if (n > 0) {
    const auto fwd = detail::reachable(forward, 0);
    const auto bwd = detail::reachable(backward, 0);
    report.p5_pass = std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
                     std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
  }
  return report;
}

/// Which operator family a continuity probe assembles.
enum class OperatorFamily { CentralDifference, HalfPoint };

/**
 * First-order continuity probe for A(u): the largest entry change under a
 * perturbation u + εv must shrink at least linearly in ε (up to a factor 10).
 */
inline OperatorReport::Continuity check_continuity(const ScalarField& field, const Diffusivity& model,
                                                   OperatorFamily family = OperatorFamily::CentralDifference,
                                                   std::uint64_t seed = 1) {
  auto build = [&](const ScalarField& u) {
    return family == OperatorFamily::HalfPoint ? assemble_half_point(u, model) : assemble(u, model);
  };
  const auto base = build(field);
  NormalSource normal(seed);
  std::vector<double> direction(field.size());
  for (auto& d : direction) d = normal.next();

  auto max_change = [&](double eps) {
    std::vector<double> moved(field.size());
    for (std::size_t k = 0; k < moved.size(); ++k) moved[k] = field[k] + eps * direction[k];
    const auto op = build(field.with_values(std::move(moved)));
    double worst = 0.0;
    for (std::size_t k = 0; k < op.dimension(); ++k) {
      for (const auto& e : op.row(k)) worst = std::max(worst, std::abs(e.value - base.entry(k, e.col)));
    }
    return worst;
  };

  OperatorReport::Continuity c;
  c.eps_coarse = 1e-2;
  c.eps_fine = 1e-5;
  c.max_change_coarse = max_change(c.eps_coarse);
  c.max_change_fine = max_change(c.eps_fine);
  c.pass = std::isfinite(c.max_change_fine) &&
           c.max_change_fine <= 10.0 * c.max_change_coarse * (c.eps_fine / c.eps_coarse) + 1e-14;
  return c;
}

// ---------------------------------------------------------------------------
// Process invariants
// ---------------------------------------------------------------------------

struct InvariantTolerances {
  /// Relative to max(1, |mean(u0)|).
  double mean_drift = 1e-10;
  double extremum_slack = 1e-12;
  double variance_slack = 1e-12;
};

struct InvariantReport {
  bool i2_pass = true;
  double max_mean_drift = 0.0;

  bool i3_pass = true;
  double max_overshoot = 0.0;
  std::optional<std::size_t> first_i3_violation;

  bool i4_pass = true;
  double max_variance_increase = 0.0;
  std::optional<std::size_t> first_variance_increase;
  double final_variance_ratio = 1.0;

  bool all_pass() const { return i2_pass && i3_pass && i4_pass; }

  std::string to_text() const {
    std::string out;
    out += "I2: " + std::string(pass_fail(i2_pass)) + " max_mean_drift=" + format_sci(max_mean_drift) + "\n";
    out += "I3: " + std::string(pass_fail(i3_pass)) + " max_overshoot=" + format_sci(max_overshoot);
    if (first_i3_violation) out += " first_violation_iter=" + std::to_string(*first_i3_violation);
    out += "\n";
    out += "I4: " + std::string(pass_fail(i4_pass)) + " max_variance_increase=" + format_sci(max_variance_increase) +
           " final_variance_ratio=" + format_sci(final_variance_ratio);
    if (first_variance_increase) out += " first_increase_iter=" + std::to_string(*first_variance_increase);
    out += "\n";
    return out;
  }
};

/**
 * Checks a run log against the statistics of its initial field: mean drift
 * (I2), containment in [min u0, max u0] (I3), and nonincreasing variance, the
 * observable side of convergence to the constant steady state (I4).
 */
inline InvariantReport verify_invariants(const MetricsLog& log, const FieldStats& u0,
                                         const InvariantTolerances& tol = {}) {
  InvariantReport report;
  const double mean_tol = tol.mean_drift * std::max(1.0, std::abs(u0.mean));
  double previous_variance = u0.variance;
  for (const auto& r : log.records()) {
    report.max_mean_drift = std::max(report.max_mean_drift, std::abs(r.mean - u0.mean));

    const double overshoot = std::max(r.max - u0.max, u0.min - r.min);
    report.max_overshoot = std::max(report.max_overshoot, overshoot);
    if (overshoot > tol.extremum_slack && !report.first_i3_violation) report.first_i3_violation = r.iteration;

    const double increase = r.variance - previous_variance;
    report.max_variance_increase = std::max(report.max_variance_increase, increase);
    if (increase > tol.variance_slack && !report.first_variance_increase) {
      report.first_variance_increase = r.iteration;
    }
    previous_variance = r.variance;
  }
  report.i2_pass = report.max_mean_drift <= mean_tol;
  report.i3_pass = !report.first_i3_violation.has_value();
  report.i4_pass = !report.first_variance_increase.has_value();
  if (!log.empty()) {
    report.final_variance_ratio = u0.variance > 0.0 ? log.back().variance / u0.variance : 0.0;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Denoising experiment
// ---------------------------------------------------------------------------

struct ExperimentScheme {
  std::string name;
  Diffusivity model;
  SchemeConfig config;
};

struct ExperimentResult {
  std::string name;
  std::size_t stop_iteration = 0;
  double min_error = 0.0;
  /// False when max_iters ran out before the minimum was confirmed.
  bool confirmed = false;
  /// d(clean, u_n) for n = 0, 1, ...
  std::vector<double> errors;
  /// errors / d(clean, noisy); all zeros when noisy == clean.
  std::vector<double> relative_errors;
  std::vector<double> variances;
  ScalarField field_at_stop;
};

/**
 * Runs each scheme from `noisy` and stops at the first minimum of the L1 error
 * to `clean`: the running minimum is accepted once the error has failed to go
 * below it for `patience` consecutive iterations. An error of exactly zero is
 * accepted immediately.
 */
inline std::vector<ExperimentResult> denoise_experiment(const ScalarField& clean, const ScalarField& noisy,
                                                        const std::vector<ExperimentScheme>& schemes,
                                                        std::size_t max_iters, std::size_t patience = 10) {
  if (clean.extent() != noisy.extent()) throw DimensionError("clean and noisy images differ in size");
  if (max_iters == 0) throw ConfigError("max_iters must be at least 1");
  if (patience == 0) throw ConfigError("patience must be at least 1");

  const double d0 = l1_distance(clean, noisy);
  std::vector<ExperimentResult> results;
  for (const auto& scheme : schemes) {
    scheme.config.validate();
    ExperimentResult res;
    res.name = scheme.name;
    res.errors.push_back(d0);
    res.variances.push_back(variance(noisy));
    res.min_error = d0;
    res.field_at_stop = noisy;

    ScalarField u = noisy;
    std::size_t since_best = 0;
    if (d0 == 0.0) {
      res.confirmed = true;
    } else {
      for (std::size_t n = 1; n <= max_iters; ++n) {
        u = step(u, scheme.model, scheme.config);
        const double d = l1_distance(clean, u);
        res.errors.push_back(d);
        res.variances.push_back(variance(u));
        if (d < res.min_error) {
          res.min_error = d;
          res.stop_iteration = n;
          res.field_at_stop = u;
          since_best = 0;
          if (d == 0.0) {
            res.confirmed = true;
            break;
          }
        } else if (++since_best >= patience) {
          res.confirmed = true;
          break;
        }
      }
    }
    res.relative_errors.reserve(res.errors.size());
    for (double d : res.errors) res.relative_errors.push_back(d0 > 0.0 ? d / d0 : 0.0);
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace pmdiff
