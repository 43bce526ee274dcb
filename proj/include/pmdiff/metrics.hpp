#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmdiff/errors.hpp"
#include "pmdiff/grid.hpp"

namespace pmdiff {

struct FieldStats {
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline double mean(const ScalarField& field) {
  double sum = 0.0;
  for (double v : field.values()) sum += v;
  return sum / static_cast<double>(field.size());
}

/// Population variance over all pixels (two-pass).
inline double variance(const ScalarField& field) {
  const double mu = mean(field);
  double acc = 0.0;
  for (double v : field.values()) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(field.size());
}

inline FieldStats field_stats(const ScalarField& field) {
  const auto [lo, hi] = std::minmax_element(field.values().begin(), field.values().end());
  return {mean(field), variance(field), *lo, *hi};
}

/// d(a, b) = Σ|a - b| over all pixels.
inline double l1_distance(const ScalarField& a, const ScalarField& b) {
  if (a.extent() != b.extent()) throw DimensionError("l1_distance: field dimensions differ");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
  return acc;
}

struct MetricsRecord {
  std::size_t iteration = 0;
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::optional<double> l1_ref;
};

/// Per-iteration statistics of a run. Iterations are strictly increasing.
class MetricsLog {
public:
  void push(const MetricsRecord& record) {
    if (!records_.empty() && record.iteration <= records_.back().iteration) {
      throw ConfigError("metrics log iterations must be strictly increasing");
    }
    const bool finite = std::isfinite(record.mean) && std::isfinite(record.variance) && std::isfinite(record.min) &&
                        std::isfinite(record.max) && (!record.l1_ref || std::isfinite(*record.l1_ref));
    if (!finite) throw DomainError("metrics record for iteration " + std::to_string(record.iteration) + " is not finite");
    records_.push_back(record);
  }

  void record(std::size_t iteration, const ScalarField& field, const ScalarField* reference = nullptr) {
    const auto s = field_stats(field);
    MetricsRecord r{iteration, s.mean, s.variance, s.min, s.max, std::nullopt};
    if (reference) r.l1_ref = l1_distance(*reference, field);
    push(r);
  }

  std::span<const MetricsRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const MetricsRecord& back() const { return records_.back(); }

private:
  std::vector<MetricsRecord> records_;
};

}  // namespace pmdiff
