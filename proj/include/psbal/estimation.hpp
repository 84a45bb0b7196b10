#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psbal/dataset.hpp"
#include "psbal/propensity.hpp"
#include "psbal/weighting.hpp"

namespace psbal {

enum class VarianceMethod { Sandwich, Bootstrap };

struct WacdEstimate {
  double tau_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  // tau_hat - 1.96 se
  double ci_hi = 0.0;  // tau_hat + 1.96 se
  double group1_mean = 0.0;
  double group0_mean = 0.0;
  TiltingScheme scheme = TiltingScheme::Overlap;
  VarianceMethod variance_method = VarianceMethod::Sandwich;
  int bootstrap_reps = 0;
  std::uint64_t seed = 0;
  int bootstrap_redraws = 0;
  std::vector<std::string> warnings;
};

struct HajekMeans {
  double group1 = 0.0;
  double group0 = 0.0;
  double difference() const { return group1 - group0; }
};

// Ratio-normalized weighted mean outcome per group; compensated summation.
HajekMeans hajek_means(const Dataset& ds, const WeightSet& ws);
double hajek_wacd(const Dataset& ds, const WeightSet& ws);

// Variance of the weighted contrast from the stacked estimating equations
// (logistic score + one weighted-mean equation per group), so propensity
// estimation uncertainty is propagated. Requires an untrimmed weight set.
double sandwich_se(const Dataset& ds, const PropensityModel& model,
                   TiltingScheme scheme);

// Re-estimates `pipeline` on stratified resamples (within-group, preserving
// group sizes). Replicates whose pipeline fails are redrawn with a fresh
// counter-derived seed; more than 10*n_reps failures abort.
struct BootstrapResult {
  double se = 0.0;
  int redraws = 0;
  std::vector<double> replicates;
};

using EstimatePipeline = std::function<double(const Dataset&)>;

BootstrapResult bootstrap_se(const Dataset& ds, const EstimatePipeline& pipeline,
                             int n_reps, std::uint64_t seed);

struct EstimateOptions {
  TiltingScheme scheme = TiltingScheme::Overlap;
  VarianceMethod variance = VarianceMethod::Sandwich;
  int bootstrap_reps = 1000;
  std::uint64_t seed = 0;
  std::optional<TrimBounds> trim;
  double extreme_multiple = 10.0;
};

// Full single-call analysis: propensity fit, weights, point estimate, SE, CI.
WacdEstimate estimate_wacd(const Dataset& ds, const CovariateSpec& spec,
                           const EstimateOptions& options);

}  // namespace psbal
