#include "psbal/iom_adjust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psbal/error.hpp"
#include "psbal/numeric.hpp"

namespace psbal {

namespace {

Eigen::MatrixXd outcome_design(const Dataset& ds, std::vector<std::size_t>& health_cols,
                               std::vector<std::size_t>& ses_cols) {
  health_cols = ds.columns_with_role(Role::HealthStatus);
  ses_cols = ds.columns_with_role(Role::Ses);
  const auto n = static_cast<Eigen::Index>(ds.n_units);
  const auto p = 2 + health_cols.size() + ses_cols.size();
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(p));
  X.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) X(i, 1) = static_cast<double>(ds.group[i]);
  Eigen::Index j = 2;
  for (std::size_t c : health_cols) {
    X.col(j++) = ds.covariates.col(static_cast<Eigen::Index>(c));
  }
  for (std::size_t c : ses_cols) {
    X.col(j++) = ds.covariates.col(static_cast<Eigen::Index>(c));
  }
  return X;
}

// Quasi-likelihood kernel for the log link with variance ~ mean.
double quasi_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& gamma) {
  double q = 0.0;
  Eigen::VectorXd eta = X * gamma;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (eta(i) > 700.0) return -std::numeric_limits<double>::infinity();
    q += y(i) * eta(i) - std::exp(eta(i));
  }
  return q;
}

}  // namespace

OutcomeModel fit_outcome_model(const Dataset& ds, const OutcomeFitOptions& options) {
  for (std::size_t i = 0; i < ds.n_units; ++i) {
    if (ds.outcome(static_cast<Eigen::Index>(i)) < 0.0) {
      throw_error(Errc::NegativeOutcome,
                  "outcome at row " + std::to_string(i + 1) +
                      " is negative; the log-link model needs Y >= 0");
    }
  }

  OutcomeModel model;
  Eigen::MatrixXd X = outcome_design(ds, model.health_columns, model.ses_columns);
  for (std::size_t c : model.health_columns) model.health_names.push_back(ds.covariate_names[c]);
  for (std::size_t c : model.ses_columns) model.ses_names.push_back(ds.covariate_names[c]);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    throw_error(Errc::RankDeficient, "outcome design matrix is rank deficient");
  }

  const Eigen::VectorXd& y = ds.outcome;
  double ybar = y.mean();
  if (!(ybar > 0.0)) {
    throw_error(Errc::NoConvergence, "outcome is identically zero; log link undefined");
  }

  const auto p = X.cols();
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(p);
  gamma(0) = std::log(ybar);
  double q = quasi_loglik(X, y, gamma);

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    Eigen::VectorXd mu = (X * gamma).array().exp();
    Eigen::VectorXd score = X.transpose() * (y - mu);
    double max_abs = score.cwiseAbs().maxCoeff();
    if (max_abs <= options.score_tolerance) {
      model.intercept = gamma(0);
      model.group_coef = gamma(1);
      model.health_coefs = gamma.segment(2, static_cast<Eigen::Index>(model.health_columns.size()));
      model.ses_coefs = gamma.tail(static_cast<Eigen::Index>(model.ses_columns.size()));
      model.converged = true;
      model.iterations = iter;
      model.max_abs_score = max_abs;
      return model;
    }
    if (iter == options.max_iterations) break;

    Eigen::MatrixXd info = X.transpose() * mu.asDiagonal() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) {
      throw_error(Errc::NoConvergence, "outcome information matrix not factorizable");
    }
    Eigen::VectorXd step = ldlt.solve(score);

    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      Eigen::VectorXd candidate = gamma + scale * step;
      double cand_q = quasi_loglik(X, y, candidate);
      if (cand_q > q || (h == 0 && cand_q == q)) {
        gamma = candidate;
        q = cand_q;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      throw_error(Errc::NoConvergence,
                  "outcome fit: step-halving failed at iteration " + std::to_string(iter));
    }
  }
  throw_error(Errc::NoConvergence,
              "outcome fit did not reach score tolerance in " +
                  std::to_string(options.max_iterations) + " iterations");
}

Eigen::VectorXd ses_index(const Dataset& ds, const OutcomeModel& model) {
  const auto n = static_cast<Eigen::Index>(ds.n_units);
  Eigen::VectorXd idx = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < model.ses_columns.size(); ++k) {
    idx += model.ses_coefs(static_cast<Eigen::Index>(k)) *
           ds.covariates.col(static_cast<Eigen::Index>(model.ses_columns[k]));
  }
  return idx;
}

Eigen::VectorXd predicted_outcome(const Dataset& ds, const OutcomeModel& model,
                                  const Eigen::VectorXd& ses_values) {
  const auto n = static_cast<Eigen::Index>(ds.n_units);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, model.intercept);
  for (Eigen::Index i = 0; i < n; ++i) {
    eta(i) += model.group_coef * static_cast<double>(ds.group[i]);
  }
  for (std::size_t k = 0; k < model.health_columns.size(); ++k) {
    eta += model.health_coefs(static_cast<Eigen::Index>(k)) *
           ds.covariates.col(static_cast<Eigen::Index>(model.health_columns[k]));
  }
  eta += ses_values;
  return eta.array().exp();
}

namespace {

// Stable within-group order by (value, original index).
std::vector<std::size_t> group_sort_order(const Eigen::VectorXd& values,
                                          const std::vector<int>& group, int g) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] == g) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) < values(static_cast<Eigen::Index>(b));
  });
  return order;
}

}  // namespace

Eigen::VectorXd weighted_rank(const Eigen::VectorXd& values,
                              const Eigen::VectorXd& weights,
                              const std::vector<int>& group) {
  Eigen::VectorXd ranks(values.size());
  for (int g : {0, 1}) {
    std::vector<std::size_t> order = group_sort_order(values, group, g);
    const double ng = static_cast<double>(order.size());
    double total = 0.0;
    for (std::size_t i : order) total += weights(static_cast<Eigen::Index>(i));
    if (!(total > 0.0)) {
      throw_error(Errc::AllZeroWeights,
                  "weighted rank needs positive total weight in group " + std::to_string(g));
    }

    // Tied values share the same "mass strictly below"; walk tie blocks.
    std::size_t k = 0;
    double below = 0.0;
    while (k < order.size()) {
      std::size_t block_end = k + 1;
      double v = values(static_cast<Eigen::Index>(order[k]));
      while (block_end < order.size() &&
             values(static_cast<Eigen::Index>(order[block_end])) == v) {
        ++block_end;
      }
      double block_mass = 0.0;
      for (std::size_t j = k; j < block_end; ++j) {
        double w = weights(static_cast<Eigen::Index>(order[j])) / total;
        ranks(static_cast<Eigen::Index>(order[j])) = ng * (below + 0.5 * w);
        block_mass += w;
      }
      below += block_mass;
      k = block_end;
    }
  }
  return ranks;
}

std::vector<std::size_t> unweighted_ranks(const Eigen::VectorXd& values,
                                          const std::vector<int>& group) {
  std::vector<std::size_t> ranks(group.size(), 0);
  for (int g : {0, 1}) {
    std::vector<std::size_t> order = group_sort_order(values, group, g);
    for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = r + 1;
  }
  return ranks;
}

RankReplaceResult rank_and_replace(const Eigen::VectorXd& values,
                                   const Eigen::VectorXd& weights,
                                   const std::vector<int>& group) {
  RankReplaceResult out;
  out.replaced.resize(values.size());
  out.source_unit.resize(group.size());

  Eigen::VectorXd wranks = weighted_rank(values, weights, group);
  for (int g : {0, 1}) {
    std::vector<std::size_t> order = group_sort_order(values, group, g);
    const auto ng = order.size();
    for (std::size_t i : order) {
      // Nearest unweighted rank on the mid-rank grid, ties toward the lower
      // rank; equals ceil of the weighted rank.
      double wr = wranks(static_cast<Eigen::Index>(i));
      auto target = static_cast<long>(std::ceil(wr));
      target = std::clamp(target, 1L, static_cast<long>(ng));
      std::size_t donor = order[static_cast<std::size_t>(target - 1)];
      out.source_unit[i] = donor;
      out.replaced(static_cast<Eigen::Index>(i)) = values(static_cast<Eigen::Index>(donor));
    }
  }
  return out;
}

double ecdf_restoration_distance(const Eigen::VectorXd& original,
                                 const Eigen::VectorXd& replaced,
                                 const Eigen::VectorXd& weights,
                                 const std::vector<int>& group, int g) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] == g) members.push_back(i);
  }
  if (members.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i : members) total += weights(static_cast<Eigen::Index>(i));
  if (!(total > 0.0)) {
    throw_error(Errc::AllZeroWeights, "ECDF comparison needs positive group weight");
  }

  // Both step functions jump only at original group values.
  std::vector<double> points;
  for (std::size_t i : members) points.push_back(original(static_cast<Eigen::Index>(i)));
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  double sup = 0.0;
  for (double v : points) {
    double fw = 0.0;
    long cnt = 0;
    for (std::size_t i : members) {
      if (replaced(static_cast<Eigen::Index>(i)) <= v) {
        fw += weights(static_cast<Eigen::Index>(i)) / total;
      }
      cnt += (original(static_cast<Eigen::Index>(i)) <= v);
    }
    double fu = static_cast<double>(cnt) / static_cast<double>(members.size());
    sup = std::max(sup, std::abs(fw - fu));
  }
  return sup;
}

double iomc_point(const Dataset& ds, const CovariateSpec& spec, TiltingScheme scheme,
                  const std::optional<TrimBounds>& trim) {
  PropensityModel pm = fit_logistic(ds, spec);
  WeightOptions wopt;
  wopt.trim = trim;
  WeightSet ws = balancing_weights(pm, ds.group, scheme, wopt);
  OutcomeModel om = fit_outcome_model(ds);
  Eigen::VectorXd idx = ses_index(ds, om);
  RankReplaceResult rr = rank_and_replace(idx, ws.weights, ds.group);
  Eigen::VectorXd yhat = predicted_outcome(ds, om, rr.replaced);

  Dataset pred = ds;
  pred.outcome = yhat;
  return hajek_wacd(pred, ws);
}

IomcAnalysis iomc_disparity(const Dataset& ds, const CovariateSpec& spec,
                            const IomcOptions& options) {
  IomcAnalysis out;
  PropensityModel pm = fit_logistic(ds, spec);
  WeightOptions wopt;
  wopt.trim = options.trim;
  WeightSet ws = balancing_weights(pm, ds.group, options.scheme, wopt);
  out.outcome_model = fit_outcome_model(ds);

  Eigen::VectorXd idx = ses_index(ds, out.outcome_model);
  RankReplaceResult rr = rank_and_replace(idx, ws.weights, ds.group);
  Eigen::VectorXd yhat = predicted_outcome(ds, out.outcome_model, rr.replaced);

  for (std::size_t i = 0; i < ds.n_units; ++i) {
    out.n_replaced_identity +=
        (rr.replaced(static_cast<Eigen::Index>(i)) == idx(static_cast<Eigen::Index>(i)));
  }
  out.ecdf_sup_group1 = ecdf_restoration_distance(idx, rr.replaced, ws.weights, ds.group, 1);
  out.ecdf_sup_group0 = ecdf_restoration_distance(idx, rr.replaced, ws.weights, ds.group, 0);

  Dataset pred = ds;
  pred.outcome = yhat;
  HajekMeans mu = hajek_means(pred, ws);

  WacdEstimate& est = out.estimate;
  est.group1_mean = mu.group1;
  est.group0_mean = mu.group0;
  est.tau_hat = mu.difference();
  est.scheme = options.scheme;
  est.variance_method = VarianceMethod::Bootstrap;
  est.seed = options.seed;
  est.bootstrap_reps = options.bootstrap_reps;
  est.warnings = ws.warnings;

  auto scheme = options.scheme;
  auto trim = options.trim;
  EstimatePipeline pipeline = [spec, scheme, trim](const Dataset& d) {
    return iomc_point(d, spec, scheme, trim);
  };
  BootstrapResult bs = bootstrap_se(ds, pipeline, options.bootstrap_reps, options.seed);
  est.se = bs.se;
  est.bootstrap_redraws = bs.redraws;
  if (bs.redraws > 0) {
    est.warnings.push_back("DegenerateResample: " + std::to_string(bs.redraws) +
                           " bootstrap replicates redrawn");
  }
  est.ci_lo = est.tau_hat - 1.96 * est.se;
  est.ci_hi = est.tau_hat + 1.96 * est.se;
  return out;
}

}  // namespace psbal
