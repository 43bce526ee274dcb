#pragma once

#include "pmdiff/analysis.hpp"
#include "pmdiff/cg.hpp"
#include "pmdiff/diffusivity.hpp"
#include "pmdiff/errors.hpp"
#include "pmdiff/grid.hpp"
#include "pmdiff/io.hpp"
#include "pmdiff/metrics.hpp"
#include "pmdiff/operator.hpp"
#include "pmdiff/schemes.hpp"

namespace pmdiff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pmdiff
