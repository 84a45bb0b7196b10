#include "psbal/estimation.hpp"

#include <cmath>

#include "psbal/error.hpp"
#include "psbal/numeric.hpp"
#include "psbal/rng.hpp"

namespace psbal {

HajekMeans hajek_means(const Dataset& ds, const WeightSet& ws) {
  if (static_cast<std::size_t>(ws.weights.size()) != ds.n_units) {
    throw_error(Errc::DimensionMismatch, "weight set does not match dataset size");
  }
  CompensatedSum num1, den1, num0, den0;
  for (std::size_t i = 0; i < ds.n_units; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    double w = ws.weights(k);
    if (w == 0.0) continue;
    if (ds.group[i] == 1) {
      num1.add(w * ds.outcome(k));
      den1.add(w);
    } else {
      num0.add(w * ds.outcome(k));
      den0.add(w);
    }
  }
  if (!(den1.value() > 0.0)) {
    throw_error(Errc::ZeroGroupWeight, "group 1 total weight is not positive");
  }
  if (!(den0.value() > 0.0)) {
    throw_error(Errc::ZeroGroupWeight, "group 0 total weight is not positive");
  }
  return {num1.value() / den1.value(), num0.value() / den0.value()};
}

double hajek_wacd(const Dataset& ds, const WeightSet& ws) {
  return hajek_means(ds, ws).difference();
}

double sandwich_se(const Dataset& ds, const PropensityModel& model,
                   TiltingScheme scheme) {
  if (!model.converged) {
    throw_error(Errc::NoConvergence, "sandwich variance needs a converged propensity fit");
  }
  CovariateSpec spec{model.selected};
  const Eigen::MatrixXd X = design_matrix(ds, spec);
  const auto n = X.rows();
  const auto p = X.cols();
  const Eigen::VectorXd& e = model.propensities;

  WeightSet ws = balancing_weights(model, ds.group, scheme);
  HajekMeans mu = hajek_means(ds, ws);

  // Stacked per-unit estimating functions:
  //   logistic score        (z_i - e_i) x_i
  //   group-1 mean equation z_i w1(e_i) (y_i - mu1)
  //   group-0 mean equation (1-z_i) w0(e_i) (y_i - mu0)
  const auto q = p + 2;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(q, q);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd psi(q);

  for (Eigen::Index i = 0; i < n; ++i) {
    double z = static_cast<double>(ds.group[i]);
    double y = ds.outcome(i);
    double ei = e(i);
    double s = ei * (1.0 - ei);
    Eigen::VectorXd x = X.row(i).transpose();

    double w1 = group1_weight(scheme, ei);
    double w0 = group0_weight(scheme, ei);

    psi.head(p) = (z - ei) * x;
    psi(p) = z * w1 * (y - mu.group1);
    psi(p + 1) = (1.0 - z) * w0 * (y - mu.group0);
    b += psi * psi.transpose();

    a.topLeftCorner(p, p) += s * x * x.transpose();
    a.row(p).head(p) -= z * (y - mu.group1) * group1_weight_deriv(scheme, ei) * s *
                        x.transpose();
    a.row(p + 1).head(p) -= (1.0 - z) * (y - mu.group0) *
                            group0_weight_deriv(scheme, ei) * s * x.transpose();
    a(p, p) += z * w1;
    a(p + 1, p + 1) += (1.0 - z) * w0;
  }
  a /= static_cast<double>(n);
  b /= static_cast<double>(n);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw_error(Errc::SingularJacobian, "stacked estimating-equation Jacobian is singular");
  }
  Eigen::MatrixXd a_inv = lu.inverse();
  Eigen::MatrixXd v = a_inv * b * a_inv.transpose() / static_cast<double>(n);

  double var = v(p, p) + v(p + 1, p + 1) - 2.0 * v(p, p + 1);
  if (var < 0.0 && var > -1e-12) var = 0.0;
  if (var < 0.0) {
    throw_error(Errc::SingularJacobian, "negative contrast variance from sandwich");
  }
  return std::sqrt(var);
}

BootstrapResult bootstrap_se(const Dataset& ds, const EstimatePipeline& pipeline,
                             int n_reps, std::uint64_t seed) {
  if (n_reps < 2) {
    throw_error(Errc::InvalidConfig, "bootstrap needs at least 2 replicates");
  }
  const std::vector<std::size_t> idx1 = ds.group_indices(1);
  const std::vector<std::size_t> idx0 = ds.group_indices(0);
  if (idx1.empty() || idx0.empty()) {
    throw_error(Errc::EmptyGroup, "bootstrap requires units in both groups");
  }

  BootstrapResult result;
  result.replicates.reserve(static_cast<std::size_t>(n_reps));
  const long max_failures = 10L * n_reps;
  long failures = 0;

  std::vector<std::size_t> rows(ds.n_units);
  for (int r = 0; r < n_reps; ++r) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r), attempt));
      std::size_t k = 0;
      for (std::size_t j = 0; j < idx1.size(); ++j) {
        rows[k++] = idx1[rng.uniform_below(idx1.size())];
      }
      for (std::size_t j = 0; j < idx0.size(); ++j) {
        rows[k++] = idx0[rng.uniform_below(idx0.size())];
      }
      try {
        Dataset resampled = take_rows(ds, rows);
        result.replicates.push_back(pipeline(resampled));
        break;
      } catch (const Error&) {
        if (++failures > max_failures) {
          throw_error(Errc::DegenerateResample,
                      "bootstrap aborted after " + std::to_string(failures) +
                          " failed replicates");
        }
        ++result.redraws;
      }
    }
  }

  CompensatedSum sum;
  for (double t : result.replicates) sum.add(t);
  double mean = sum.value() / static_cast<double>(n_reps);
  CompensatedSum ss;
  for (double t : result.replicates) ss.add((t - mean) * (t - mean));
  result.se = std::sqrt(ss.value() / static_cast<double>(n_reps - 1));
  return result;
}

WacdEstimate estimate_wacd(const Dataset& ds, const CovariateSpec& spec,
                           const EstimateOptions& options) {
  PropensityModel model = fit_logistic(ds, spec);
  WeightOptions wopt;
  wopt.trim = options.trim;
  wopt.extreme_multiple = options.extreme_multiple;
  WeightSet ws = balancing_weights(model, ds.group, options.scheme, wopt);
  HajekMeans mu = hajek_means(ds, ws);

  WacdEstimate est;
  est.group1_mean = mu.group1;
  est.group0_mean = mu.group0;
  est.tau_hat = mu.difference();
  est.scheme = options.scheme;
  est.variance_method = options.variance;
  est.seed = options.seed;
  est.warnings = ws.warnings;
  if (!ws.trimmed.empty()) {
    est.warnings.push_back("Trimmed: " + std::to_string(ws.trimmed.size()) +
                           " units excluded by propensity bounds; the estimand "
                           "now refers to the trimmed population");
  }

  if (options.variance == VarianceMethod::Sandwich) {
    if (!ws.trimmed.empty()) {
      throw_error(Errc::RequiresUntrimmed,
                  "sandwich variance assumes untrimmed weights; use bootstrap");
    }
    est.se = sandwich_se(ds, model, options.scheme);
  } else {
    auto scheme = options.scheme;
    auto trim = options.trim;
    EstimatePipeline pipeline = [spec, scheme, trim](const Dataset& d) {
      PropensityModel m = fit_logistic(d, spec);
      WeightOptions wo;
      wo.trim = trim;
      WeightSet w = balancing_weights(m, d.group, scheme, wo);
      return hajek_wacd(d, w);
    };
    BootstrapResult bs = bootstrap_se(ds, pipeline, options.bootstrap_reps, options.seed);
    est.se = bs.se;
    est.bootstrap_reps = options.bootstrap_reps;
    est.bootstrap_redraws = bs.redraws;
    if (bs.redraws > 0) {
      est.warnings.push_back("DegenerateResample: " + std::to_string(bs.redraws) +
                             " bootstrap replicates redrawn");
    }
  }
  est.ci_lo = est.tau_hat - 1.96 * est.se;
  est.ci_hi = est.tau_hat + 1.96 * est.se;
  return est;
}

}  // namespace psbal
