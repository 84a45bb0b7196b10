#include "psbal/propensity.hpp"

#include <cmath>
#include <string>

#include "psbal/error.hpp"
#include "psbal/numeric.hpp"

namespace psbal {

namespace {

double log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                      const Eigen::VectorXd& beta) {
  double ll = 0.0;
  Eigen::VectorXd eta = X * beta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += z(i) * eta(i) - log1pexp(eta(i));
  }
  return ll;
}

std::string offending_units(const Eigen::VectorXd& p, double tol) {
  std::string s;
  int listed = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= tol || p(i) >= 1.0 - tol) {
      if (listed == 8) {
        s += ", ...";
        break;
      }
      if (listed) s += ", ";
      s += std::to_string(i);
      ++listed;
    }
  }
  return s;
}

}  // namespace

PropensityModel fit_logistic(const Dataset& ds, const CovariateSpec& spec,
                             const LogisticOptions& options) {
  const Eigen::MatrixXd X = design_matrix(ds, spec);
  const auto n = X.rows();
  const auto p = X.cols();

  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = static_cast<double>(ds.group[i]);
  if (ds.group_size(1) == 0 || ds.group_size(0) == 0) {
    throw_error(Errc::EmptyGroup, "logistic fit requires units in both groups");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = log_likelihood(X, z, beta);

  PropensityModel model;
  model.coefficient_names = design_column_names(ds, spec);
  model.selected = spec.selected;

  Eigen::VectorXd prob(n);
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    Eigen::VectorXd eta = X * beta;
    for (Eigen::Index i = 0; i < n; ++i) prob(i) = logistic(eta(i));

    // Boundary propensities reached while still iterating signal (quasi-)
    // separation: the likelihood flattens toward a supremum at infinity and
    // the score would otherwise "converge" at divergent coefficients.
    double bt = options.boundary_tolerance;
    if ((prob.array() <= bt).any() || (prob.array() >= 1.0 - bt).any()) {
      throw_error(Errc::Separation,
                  "fitted propensities at the boundary for units [" +
                      offending_units(prob, bt) + "]; maximum likelihood does not exist");
    }

    Eigen::VectorXd score = X.transpose() * (z - prob);
    double max_abs = score.cwiseAbs().maxCoeff();
    if (max_abs <= options.score_tolerance) {
      model.coefficients = beta;
      model.propensities = prob;
      model.converged = true;
      model.iterations = iter;
      model.max_abs_score = max_abs;
      return model;
    }
    if (iter == options.max_iterations) break;

    Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd hessian = X.transpose() * w.asDiagonal() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success) {
      throw_error(Errc::NoConvergence, "information matrix not factorizable");
    }
    Eigen::VectorXd step = ldlt.solve(score);

    // Step-halving: accept the first step that improves the likelihood.
    double step_scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      Eigen::VectorXd candidate = beta + step_scale * step;
      double cand_ll = log_likelihood(X, z, candidate);
      if (cand_ll > ll || (h == 0 && cand_ll == ll)) {
        beta = candidate;
        ll = cand_ll;
        accepted = true;
        break;
      }
      step_scale *= 0.5;
    }
    if (!accepted) {
      throw_error(Errc::NoConvergence,
                  "step-halving failed to improve the log-likelihood at iteration " +
                      std::to_string(iter));
    }
  }

  throw_error(Errc::NoConvergence,
              "logistic fit did not reach score tolerance in " +
                  std::to_string(options.max_iterations) + " iterations");
}

double predict(const PropensityModel& model, const Eigen::VectorXd& x) {
  if (x.size() + 1 != model.coefficients.size()) {
    throw_error(Errc::DimensionMismatch,
                "covariate vector has " + std::to_string(x.size()) +
                    " entries, model expects " +
                    std::to_string(model.coefficients.size() - 1));
  }
  double eta = model.coefficients(0) + model.coefficients.tail(x.size()).dot(x);
  return logistic(eta);
}

}  // namespace psbal
