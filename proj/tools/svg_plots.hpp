#pragma once

#include <string>

#include "psbal/diagnostics.hpp"

namespace psbal {

// Self-contained SVG renderings of the balance diagnostics; no plotting
// dependency, byte-stable output for identical inputs.

// Dot chart of per-covariate ASD, one marker color per weighting scheme and
// a dashed reference line at the balance threshold.
std::string love_plot_svg(const BalanceReport& report);

// Side-by-side histogram of the fitted propensities per group.
std::string ps_density_svg(const OverlapSummary& summary);

}  // namespace psbal
