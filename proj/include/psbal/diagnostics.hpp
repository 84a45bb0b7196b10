#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psbal/dataset.hpp"
#include "psbal/propensity.hpp"
#include "psbal/weighting.hpp"

namespace psbal {

// Absolute standardized difference of one expanded covariate column.
// Numerator: |weighted group means difference| (plain means when ws absent).
// Denominator: sqrt of the average UNWEIGHTED within-group variance, held
// fixed across schemes so one report compares them on a common scale.
// Zero denominator: returns 0 when the means agree, +infinity otherwise.
double asd(const Dataset& ds, const std::string& covariate,
           const WeightSet* ws = nullptr);
double asd_column(const Dataset& ds, std::size_t column, const WeightSet* ws = nullptr);

struct BalanceRow {
  std::string covariate;
  double unweighted = 0.0;
  std::map<std::string, double> by_scheme;  // scheme name -> ASD
};

struct BalanceReport {
  std::vector<BalanceRow> rows;  // sorted by unweighted ASD, descending
  double threshold = 0.1;
  // scheme name ("unweighted", "ipw", ...) -> covariates above threshold
  std::map<std::string, std::vector<std::string>> flags;
};

BalanceReport balance_report(const Dataset& ds, const PropensityModel& model,
                             const std::vector<TiltingScheme>& schemes,
                             double threshold = 0.1);

struct OverlapSummary {
  std::vector<double> bin_edges;  // size bins+1, equal width over [0,1]
  std::vector<long> group1_counts;
  std::vector<long> group0_counts;
  double group1_tail_mass = 0.0;  // fraction with e > 0.95 or e < 0.05
  double group0_tail_mass = 0.0;
};

OverlapSummary overlap_summary(const Eigen::VectorXd& propensities,
                               const std::vector<int>& group, int bins);

std::string balance_report_csv(const BalanceReport& report);
std::string histogram_csv(const OverlapSummary& summary);

}  // namespace psbal
