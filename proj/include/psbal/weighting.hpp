#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "psbal/propensity.hpp"

namespace psbal {

// Target population selector. Each choice fixes how the sample is tilted and
// therefore what the weighted contrast describes:
//   Combined  -> the pooled population of both groups (IPW),
//   OneGroup  -> the population of group 1 (ATT-style weights),
//   Overlap   -> the subpopulation most likely to belong to either group (OW).
enum class TiltingScheme { Combined, OneGroup, Overlap };

const char* scheme_name(TiltingScheme s);          // "ipw" / "att" / "ow"
TiltingScheme scheme_from_string(const std::string& s);

// Raw (unnormalized) group-1 and group-0 weights at propensity e.
double group1_weight(TiltingScheme s, double e);
double group0_weight(TiltingScheme s, double e);
// Derivatives in e, needed by the stacked variance estimator.
double group1_weight_deriv(TiltingScheme s, double e);
double group0_weight_deriv(TiltingScheme s, double e);

struct TrimBounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct WeightSet {
  Eigen::VectorXd weights;          // raw weights; trimmed units carry exactly 0
  TiltingScheme scheme = TiltingScheme::Overlap;
  std::vector<std::size_t> trimmed;
  double group1_weight_sum = 0.0;
  double group0_weight_sum = 0.0;
  std::vector<std::string> warnings;  // extreme-weight diagnostics, non-fatal
};

struct WeightOptions {
  std::optional<TrimBounds> trim;
  // A Combined/OneGroup weight larger than this multiple of its group's mean
  // weight is flagged as a practical positivity violation.
  double extreme_multiple = 10.0;
};

WeightSet balancing_weights(const PropensityModel& model,
                            const std::vector<int>& group, TiltingScheme scheme,
                            const WeightOptions& options = {});

// Kish effective sample size per group: (sum w)^2 / sum w^2.
struct EffectiveSampleSize {
  double group1 = 0.0;
  double group0 = 0.0;
};

EffectiveSampleSize effective_sample_size(const WeightSet& ws,
                                          const std::vector<int>& group);

// Audit export: unit_id, group, propensity, weight, trimmed_flag.
std::string weights_csv(const WeightSet& ws, const std::vector<int>& group,
                        const Eigen::VectorXd& propensities);

}  // namespace psbal
