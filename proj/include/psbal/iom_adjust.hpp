#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psbal/dataset.hpp"
#include "psbal/estimation.hpp"
#include "psbal/weighting.hpp"

namespace psbal {

// Log-link outcome regression on group membership, health-status covariates
// and SES covariates, fitted jointly on the full sample. Quasi-likelihood
// with variance proportional to the mean, so zero outcomes are admissible
// (no log of the outcome is ever taken).
struct OutcomeModel {
  double intercept = 0.0;
  double group_coef = 0.0;
  Eigen::VectorXd health_coefs;
  Eigen::VectorXd ses_coefs;
  std::vector<std::size_t> health_columns;  // expanded column indices in the Dataset
  std::vector<std::size_t> ses_columns;
  std::vector<std::string> health_names;
  std::vector<std::string> ses_names;
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
};

struct OutcomeFitOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-8;
};

OutcomeModel fit_outcome_model(const Dataset& ds, const OutcomeFitOptions& options = {});

// Per-unit SES predictive index: the SES part of the linear predictor.
Eigen::VectorXd ses_index(const Dataset& ds, const OutcomeModel& model);

// Linear predictor at observed group membership, with the SES contribution
// replaced by `ses_values`; prediction is exp of this.
Eigen::VectorXd predicted_outcome(const Dataset& ds, const OutcomeModel& model,
                                  const Eigen::VectorXd& ses_values);

// Within-group weighted rank on the (0, n_g) scale: normalized weight mass
// strictly below the unit's value plus half its own mass, times n_g. Unit
// weights reduce to mid-ranks k - 1/2.
Eigen::VectorXd weighted_rank(const Eigen::VectorXd& values,
                              const Eigen::VectorXd& weights,
                              const std::vector<int>& group);

// Within-group unweighted ranks 1..n_g, ties broken by original row order.
std::vector<std::size_t> unweighted_ranks(const Eigen::VectorXd& values,
                                          const std::vector<int>& group);

// Give each unit the value held by the unit whose unweighted rank is nearest
// to its weighted rank (ties toward the lower rank). Uniform weights make
// this the identity map; replaced values always come from the unit's own
// group's original values.
struct RankReplaceResult {
  Eigen::VectorXd replaced;
  std::vector<std::size_t> source_unit;  // donor unit index per unit
};

RankReplaceResult rank_and_replace(const Eigen::VectorXd& values,
                                   const Eigen::VectorXd& weights,
                                   const std::vector<int>& group);

// sup_x | weighted ECDF of replaced values - unweighted ECDF of originals |
// within group g.
double ecdf_restoration_distance(const Eigen::VectorXd& original,
                                 const Eigen::VectorXd& replaced,
                                 const Eigen::VectorXd& weights,
                                 const std::vector<int>& group, int g);

struct IomcOptions {
  TiltingScheme scheme = TiltingScheme::Overlap;
  int bootstrap_reps = 1000;
  std::uint64_t seed = 0;
  std::optional<TrimBounds> trim;
};

struct IomcAnalysis {
  WacdEstimate estimate;  // bootstrap variance over the full pipeline
  OutcomeModel outcome_model;
  std::size_t n_replaced_identity = 0;  // units whose replaced value equals their own
  double ecdf_sup_group1 = 0.0;
  double ecdf_sup_group0 = 0.0;
};

// Point estimate of the re-weighted predicted-outcome contrast after
// rank-and-replace; refits every stage on the dataset it is given.
double iomc_point(const Dataset& ds, const CovariateSpec& spec, TiltingScheme scheme,
                  const std::optional<TrimBounds>& trim = {});

IomcAnalysis iomc_disparity(const Dataset& ds, const CovariateSpec& spec,
                            const IomcOptions& options);

}  // namespace psbal
