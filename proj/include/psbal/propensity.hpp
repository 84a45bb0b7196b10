#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "psbal/dataset.hpp"

namespace psbal {

// Maximum-likelihood logistic fit of group membership on the selected
// covariates. Exact ML matters: the downstream overlap-weight balance
// identity is the first-order condition of this fit.
struct PropensityModel {
  Eigen::VectorXd coefficients;          // log-odds scale, intercept first
  std::vector<std::string> coefficient_names;
  std::vector<std::string> selected;     // source covariate names of the design
  Eigen::VectorXd propensities;          // fitted e(X_i), each in (0,1)
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
};

struct LogisticOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-8;
  double boundary_tolerance = 1e-10;  // propensity this close to 0/1 => separation
};

PropensityModel fit_logistic(const Dataset& ds, const CovariateSpec& spec,
                             const LogisticOptions& options = {});

// logistic(intercept + x . slopes); x excludes the intercept.
double predict(const PropensityModel& model, const Eigen::VectorXd& x);

}  // namespace psbal
