#include "psbal/synth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psbal/error.hpp"
#include "psbal/estimation.hpp"
#include "psbal/numeric.hpp"
#include "psbal/propensity.hpp"
#include "psbal/rng.hpp"

namespace psbal {

namespace {

constexpr std::uint64_t kTruthStream = 0x7157;
constexpr std::uint64_t kReplicateStream = 0x5EED;

double mean_at(const OutcomeSpec& spec, int z, const Eigen::VectorXd& x) {
  const Eigen::VectorXd& c = z == 1 ? spec.coef1 : spec.coef0;
  double eta = c(0) + c.tail(x.size()).dot(x);
  return spec.kind == OutcomeSpec::Kind::Linear ? eta : std::exp(eta);
}

}  // namespace

int covariate_count(const Scenario& sc) {
  return sc.n_normal + (sc.with_bernoulli ? 1 : 0);
}

void validate_scenario(const Scenario& sc) {
  const int p = covariate_count(sc);
  if (sc.n < 2) throw_error(Errc::InvalidScenario, "n must be at least 2");
  if (sc.n_normal < 0 || p < 1) {
    throw_error(Errc::InvalidScenario, "scenario needs at least one covariate");
  }
  if (sc.beta.size() != p + 1) {
    throw_error(Errc::InvalidScenario,
                "beta must have length 1 + " + std::to_string(p));
  }
  if (sc.outcome.coef1.size() != p + 1 || sc.outcome.coef0.size() != p + 1) {
    throw_error(Errc::InvalidScenario,
                "outcome coefficient vectors must have length 1 + " + std::to_string(p));
  }
  if (sc.outcome.noise < 0.0) throw_error(Errc::InvalidScenario, "noise must be >= 0");
  if (!(sc.bernoulli_p > 0.0 && sc.bernoulli_p < 1.0) && sc.with_bernoulli) {
    throw_error(Errc::InvalidScenario, "bernoulli_p must be in (0,1)");
  }
  if (sc.overlap_knob <= 0.0) throw_error(Errc::InvalidScenario, "overlap_knob must be > 0");
  if (sc.correlation.size() != 0 &&
      (sc.correlation.rows() != sc.n_normal || sc.correlation.cols() != sc.n_normal)) {
    throw_error(Errc::InvalidScenario, "correlation must be n_normal x n_normal");
  }
  if (!sc.roles.empty() && sc.roles.size() != static_cast<std::size_t>(p)) {
    throw_error(Errc::InvalidScenario, "roles must have one entry per covariate");
  }
}

double GroundTruth::tau(TiltingScheme s) const {
  switch (s) {
    case TiltingScheme::Combined: return tau_ipw;
    case TiltingScheme::OneGroup: return tau_att;
    case TiltingScheme::Overlap: return tau_ow;
  }
  return 0.0;
}

double GroundTruth::mc_se(TiltingScheme s) const {
  switch (s) {
    case TiltingScheme::Combined: return mc_se_ipw;
    case TiltingScheme::OneGroup: return mc_se_att;
    case TiltingScheme::Overlap: return mc_se_ow;
  }
  return 0.0;
}

namespace {

class CovariateSampler {
 public:
  explicit CovariateSampler(const Scenario& sc) : sc_(sc) {
    if (sc.correlation.size() != 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(sc.correlation);
      if (llt.info() != Eigen::Success) {
        throw_error(Errc::InvalidScenario, "correlation matrix is not positive definite");
      }
      chol_ = llt.matrixL();
      correlated_ = true;
    }
  }

  Eigen::VectorXd draw(Rng& rng) const {
    Eigen::VectorXd x(covariate_count(sc_));
    for (int j = 0; j < sc_.n_normal; ++j) x(j) = rng.normal();
    if (correlated_) {
      x.head(sc_.n_normal) = chol_ * x.head(sc_.n_normal);
    }
    if (sc_.with_bernoulli) {
      x(sc_.n_normal) = rng.bernoulli(sc_.bernoulli_p) ? 1.0 : 0.0;
    }
    return x;
  }

 private:
  const Scenario& sc_;
  Eigen::MatrixXd chol_;
  bool correlated_ = false;
};

double draw_outcome(const Scenario& sc, int z, const Eigen::VectorXd& x, Rng& rng) {
  double m = mean_at(sc.outcome, z, x);
  if (sc.outcome.kind == OutcomeSpec::Kind::Linear) {
    return sc.outcome.noise > 0.0 ? m + sc.outcome.noise * rng.normal() : m;
  }
  if (sc.outcome.noise > 0.0) {
    double shape = 1.0 / sc.outcome.noise;
    return m * rng.gamma(shape, sc.outcome.noise);
  }
  return m;
}

struct Draw {
  Dataset data;
  Eigen::VectorXd true_e;
  bool both_groups;
};

Draw draw_dataset(const Scenario& sc, std::uint64_t seed) {
  const int p = covariate_count(sc);
  CovariateSampler sampler(sc);
  Rng rng(seed);
  Eigen::VectorXd beta = sc.overlap_knob * sc.beta;

  Draw out;
  Dataset& ds = out.data;
  ds.n_units = sc.n;
  ds.group.resize(sc.n);
  ds.outcome.resize(static_cast<Eigen::Index>(sc.n));
  ds.covariates.resize(static_cast<Eigen::Index>(sc.n), p);
  out.true_e.resize(static_cast<Eigen::Index>(sc.n));

  for (std::size_t i = 0; i < sc.n; ++i) {
    Eigen::VectorXd x = sampler.draw(rng);
    double e = logistic(beta(0) + beta.tail(p).dot(x));
    int z = rng.bernoulli(e) ? 1 : 0;
    double y = draw_outcome(sc, z, x, rng);
    const auto k = static_cast<Eigen::Index>(i);
    ds.covariates.row(k) = x.transpose();
    ds.group[i] = z;
    ds.outcome(k) = y;
    out.true_e(k) = e;
  }

  for (int j = 0; j < sc.n_normal; ++j) {
    ds.covariate_names.push_back("x" + std::to_string(j + 1));
  }
  if (sc.with_bernoulli) ds.covariate_names.push_back("b1");
  ds.source_names = ds.covariate_names;
  ds.roles = sc.roles.empty()
                 ? std::vector<Role>(static_cast<std::size_t>(p), Role::HealthStatus)
                 : sc.roles;
  ds.group_column_name = "z";
  ds.outcome_column_name = "y";

  std::size_t n1 = ds.group_size(1);
  out.both_groups = n1 > 0 && n1 < sc.n;
  return out;
}

}  // namespace

Dataset generate_dataset(const Scenario& sc, std::uint64_t seed) {
  validate_scenario(sc);
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Draw d = draw_dataset(sc, attempt == 0 ? seed : derive_seed(seed, attempt));
    if (d.both_groups) return std::move(d.data);
  }
  throw_error(Errc::InvalidScenario,
              "scenario keeps producing single-group samples; propensities too extreme");
}

Generated generate(const Scenario& sc) {
  validate_scenario(sc);
  const int p = covariate_count(sc);

  Generated out;
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Draw d = draw_dataset(sc, attempt == 0 ? sc.seed : derive_seed(sc.seed, attempt));
    if (d.both_groups) {
      out.data = std::move(d.data);
      out.truth.true_propensities = std::move(d.true_e);
      break;
    }
    if (attempt == 99) {
      throw_error(Errc::InvalidScenario,
                  "scenario keeps producing single-group samples; propensities too extreme");
    }
  }

  // Target contrasts by Monte Carlo over the covariate density, using the
  // true tilting functions. Ratio-estimator standard error via the delta
  // method, reported so test tolerances can fold it in.
  CovariateSampler sampler(sc);
  Rng rng(derive_seed(sc.seed, kTruthStream));
  Eigen::VectorXd beta = sc.overlap_knob * sc.beta;
  const long m = sc.mc_draws;

  // Ratio estimator tau = mean(h*tau_x)/mean(h); its delta-method variance
  // only needs second moments of (h*tau_x, h).
  CompensatedSum sum_h[3], sum_a[3], sum_aa[3], sum_ab[3], sum_bb[3];
  for (long d = 0; d < m; ++d) {
    Eigen::VectorXd x = sampler.draw(rng);
    double e = logistic(beta(0) + beta.tail(p).dot(x));
    double tau_x = mean_at(sc.outcome, 1, x) - mean_at(sc.outcome, 0, x);
    double h[3] = {1.0, e, e * (1.0 - e)};
    for (int s = 0; s < 3; ++s) {
      double a = h[s] * tau_x;
      sum_h[s].add(h[s]);
      sum_a[s].add(a);
      sum_aa[s].add(a * a);
      sum_ab[s].add(a * h[s]);
      sum_bb[s].add(h[s] * h[s]);
    }
  }

  double tau[3], se[3];
  for (int s = 0; s < 3; ++s) {
    const double md = static_cast<double>(m);
    double hbar = sum_h[s].value() / md;
    tau[s] = sum_a[s].value() / sum_h[s].value();
    double var_infl = sum_aa[s].value() / md - 2.0 * tau[s] * sum_ab[s].value() / md +
                      tau[s] * tau[s] * sum_bb[s].value() / md;
    se[s] = std::sqrt(std::max(var_infl, 0.0) / md) / hbar;
  }
  out.truth.tau_ipw = tau[0];
  out.truth.tau_att = tau[1];
  out.truth.tau_ow = tau[2];
  out.truth.mc_se_ipw = se[0];
  out.truth.mc_se_att = se[1];
  out.truth.mc_se_ow = se[2];
  out.truth.mc_draws = m;
  return out;
}

StudyResult replicate_study(const Scenario& sc, int n_reps,
                            const std::vector<TiltingScheme>& schemes) {
  if (n_reps < 2) throw_error(Errc::InvalidScenario, "replicate_study needs n_reps >= 2");
  Generated ref = generate(sc);  // ground truth; the dataset itself is unused

  CovariateSpec spec{ref.data.source_names};
  struct Acc {
    std::vector<double> taus;
    std::vector<double> ses;
    long covered = 0;
  };
  std::vector<Acc> acc(schemes.size());
  int redraws = 0;

  for (int r = 0; r < n_reps; ++r) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      std::uint64_t seed =
          derive_seed(sc.seed, kReplicateStream + static_cast<std::uint64_t>(r), attempt);
      try {
        Dataset ds = generate_dataset(sc, seed);
        PropensityModel model = fit_logistic(ds, spec);
        for (std::size_t s = 0; s < schemes.size(); ++s) {
          WeightSet ws = balancing_weights(model, ds.group, schemes[s]);
          double tau = hajek_wacd(ds, ws);
          double se = sandwich_se(ds, model, schemes[s]);
          acc[s].taus.push_back(tau);
          acc[s].ses.push_back(se);
          double truth = ref.truth.tau(schemes[s]);
          acc[s].covered += (std::abs(tau - truth) <= 1.96 * se);
        }
        break;
      } catch (const Error&) {
        if (++redraws > 10 * n_reps) {
          throw_error(Errc::DegenerateResample,
                      "replicate study aborted: too many failed replicates");
        }
      }
    }
  }

  StudyResult result;
  result.n_reps = n_reps;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    SchemeStudy row;
    row.scheme = schemes[s];
    row.true_tau = ref.truth.tau(schemes[s]);
    row.true_tau_mc_se = ref.truth.mc_se(schemes[s]);
    CompensatedSum st, sse;
    for (double t : acc[s].taus) st.add(t);
    for (double e : acc[s].ses) sse.add(e);
    row.mean_estimate = st.value() / n_reps;
    row.mean_sandwich_se = sse.value() / n_reps;
    row.bias = row.mean_estimate - row.true_tau;
    CompensatedSum ss;
    for (double t : acc[s].taus) ss.add((t - row.mean_estimate) * (t - row.mean_estimate));
    row.empirical_sd = std::sqrt(ss.value() / (n_reps - 1));
    row.coverage95 = static_cast<double>(acc[s].covered) / n_reps;
    row.redraws = redraws;
    result.schemes.push_back(row);
  }
  return result;
}

std::string study_csv(const StudyResult& result) {
  auto fmt = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  std::string out =
      "scheme,true_tau,true_tau_mc_se,mean_estimate,bias,empirical_sd,"
      "mean_sandwich_se,coverage_95,n_redrawn\n";
  for (const SchemeStudy& row : result.schemes) {
    out += std::string(scheme_name(row.scheme)) + "," + fmt(row.true_tau) + "," +
           fmt(row.true_tau_mc_se) + "," + fmt(row.mean_estimate) + "," + fmt(row.bias) +
           "," + fmt(row.empirical_sd) + "," + fmt(row.mean_sandwich_se) + "," +
           fmt(row.coverage95) + "," + std::to_string(row.redraws) + "\n";
  }
  return out;
}

namespace {

Eigen::VectorXd json_vector(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_error(Errc::InvalidScenario, std::string("scenario JSON parse error: ") + e.what());
  }
  try {
    Scenario sc;
    sc.n = j.at("n").get<std::size_t>();
    sc.beta = json_vector(j.at("beta"));
    sc.overlap_knob = j.value("overlap_knob", 1.0);
    sc.n_normal = j.value("n_normal", 2);
    sc.with_bernoulli = j.value("with_bernoulli", true);
    sc.bernoulli_p = j.value("bernoulli_p", 0.5);
    if (j.contains("correlation")) {
      const auto& rows = j.at("correlation");
      sc.correlation.resize(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          sc.correlation(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              rows[r][c].get<double>();
        }
      }
    }
    const auto& oc = j.at("outcome");
    std::string kind = oc.value("kind", "linear");
    if (kind == "linear") {
      sc.outcome.kind = OutcomeSpec::Kind::Linear;
    } else if (kind == "loglinear") {
      sc.outcome.kind = OutcomeSpec::Kind::LogLinear;
    } else {
      throw_error(Errc::InvalidScenario, "outcome kind must be linear or loglinear");
    }
    sc.outcome.coef1 = json_vector(oc.at("coef1"));
    sc.outcome.coef0 = json_vector(oc.at("coef0"));
    sc.outcome.noise = oc.value("noise", 1.0);
    if (j.contains("roles")) {
      for (const auto& r : j.at("roles")) {
        sc.roles.push_back(role_from_string(r.get<std::string>()));
      }
    }
    sc.seed = j.value("seed", 0ULL);
    sc.mc_draws = j.value("mc_draws", 1000000L);
    validate_scenario(sc);
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw_error(Errc::InvalidScenario, std::string("scenario JSON schema error: ") + e.what());
  }
}

Scenario scenario_from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(Errc::InvalidScenario, "cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_text(ss.str());
}

}  // namespace psbal
