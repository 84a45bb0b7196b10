#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "psbal/config.hpp"
#include "psbal/dataset.hpp"
#include "psbal/diagnostics.hpp"
#include "psbal/error.hpp"
#include "psbal/estimation.hpp"
#include "psbal/iom_adjust.hpp"
#include "psbal/propensity.hpp"
#include "psbal/synth.hpp"
#include "psbal/version.hpp"
#include "psbal/weighting.hpp"
#include "svg_plots.hpp"

namespace {

using psbal::AnalysisConfig;
using ordered_json = nlohmann::ordered_json;

struct ScalarOverrides {
  std::string scheme;
  std::string variance;
  int reps = -1;
  std::optional<std::uint64_t> seed;
  std::string trim;  // "lo,hi"
  std::string output_dir;
};

psbal::TrimBounds parse_trim(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) {
    psbal::throw_error(psbal::Errc::InvalidConfig, "--trim expects lo,hi");
  }
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    psbal::throw_error(psbal::Errc::InvalidConfig, "--trim expects two numbers lo,hi");
  }
}

AnalysisConfig effective_config(const std::string& config_path, const ScalarOverrides& ov) {
  AnalysisConfig cfg = psbal::analysis_config_from_json_file(config_path);
  if (!ov.scheme.empty()) cfg.scheme = psbal::scheme_from_string(ov.scheme);
  if (!ov.variance.empty()) cfg.variance = psbal::variance_from_string(ov.variance);
  if (ov.reps >= 0) cfg.reps = ov.reps;
  if (ov.seed) cfg.seed = *ov.seed;
  if (!ov.trim.empty()) cfg.trim = parse_trim(ov.trim);
  if (!ov.output_dir.empty()) cfg.output_dir = ov.output_dir;
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    psbal::throw_error(psbal::Errc::InvalidConfig,
                       "cannot write output file '" + path.string() + "'");
  }
  out << content;
}

void emit_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

ordered_json output_header(const AnalysisConfig& cfg) {
  ordered_json j;
  j["version"] = psbal::kVersion;
  j["config_hash"] = psbal::config_hash(cfg);
  return j;
}

std::string fnv_hex(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run_fit(const std::string& config_path, const ScalarOverrides& ov) {
  AnalysisConfig cfg = effective_config(config_path, ov);
  psbal::Dataset ds = psbal::load_dataset(cfg.data_path, cfg.data);
  psbal::PropensityModel model = psbal::fit_logistic(ds, psbal::propensity_spec(cfg));

  ordered_json j = output_header(cfg);
  ordered_json coef;
  for (Eigen::Index k = 0; k < model.coefficients.size(); ++k) {
    coef[model.coefficient_names[static_cast<std::size_t>(k)]] = model.coefficients(k);
  }
  j["coefficients"] = coef;
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  j["max_abs_score"] = model.max_abs_score;
  j["n"] = ds.n_units;
  j["n_group1"] = ds.group_size(1);
  j["n_group0"] = ds.group_size(0);
  write_file(std::filesystem::path(cfg.output_dir) / "model.json", j.dump(2) + "\n");
  std::cout << "model.json written to " << cfg.output_dir << "\n";
  return 0;
}

int run_balance(const std::string& config_path, const ScalarOverrides& ov, int bins,
                bool svg) {
  AnalysisConfig cfg = effective_config(config_path, ov);
  psbal::Dataset ds = psbal::load_dataset(cfg.data_path, cfg.data);
  psbal::PropensityModel model = psbal::fit_logistic(ds, psbal::propensity_spec(cfg));

  std::vector<psbal::TiltingScheme> schemes = {psbal::TiltingScheme::Combined,
                                               psbal::TiltingScheme::OneGroup,
                                               psbal::TiltingScheme::Overlap};
  psbal::BalanceReport report = psbal::balance_report(ds, model, schemes);
  psbal::OverlapSummary summary = psbal::overlap_summary(model.propensities, ds.group, bins);

  std::vector<std::string> warnings;
  if (summary.group1_tail_mass > 0.05 || summary.group0_tail_mass > 0.05) {
    warnings.push_back("TailMass: propensities outside (0.05, 0.95) for " +
                       std::to_string(summary.group1_tail_mass) + " of group 1 and " +
                       std::to_string(summary.group0_tail_mass) +
                       " of group 0; overlap may be poor");
  }
  emit_warnings(warnings);

  const std::filesystem::path dir(cfg.output_dir);
  write_file(dir / "balance_report.csv", psbal::balance_report_csv(report));
  write_file(dir / "ps_histogram.csv", psbal::histogram_csv(summary));
  if (svg) {
    write_file(dir / "love_plot.svg", psbal::love_plot_svg(report));
    write_file(dir / "ps_density.svg", psbal::ps_density_svg(summary));
  }

  ordered_json j = output_header(cfg);
  j["threshold"] = report.threshold;
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json r;
    r["covariate"] = row.covariate;
    r["unweighted"] = row.unweighted;
    for (const auto& [name, v] : row.by_scheme) r[name] = v;
    rows.push_back(r);
  }
  j["asd"] = rows;
  ordered_json flags;
  for (const auto& [name, covs] : report.flags) flags[name] = covs;
  j["flags_above_threshold"] = flags;
  j["tail_mass"] = {{"group1", summary.group1_tail_mass},
                    {"group0", summary.group0_tail_mass}};
  j["warnings"] = warnings;
  write_file(dir / "balance.json", j.dump(2) + "\n");
  std::cout << "balance artifacts written to " << cfg.output_dir << "\n";
  return 0;
}

int run_estimate(const std::string& config_path, const ScalarOverrides& ov) {
  AnalysisConfig cfg = effective_config(config_path, ov);
  psbal::Dataset ds = psbal::load_dataset(cfg.data_path, cfg.data);

  psbal::EstimateOptions opt;
  opt.scheme = cfg.scheme;
  opt.variance = cfg.variance;
  opt.bootstrap_reps = cfg.reps;
  opt.seed = cfg.seed;
  opt.trim = cfg.trim;
  psbal::WacdEstimate est = psbal::estimate_wacd(ds, psbal::propensity_spec(cfg), opt);

  // Audit export of the weights actually used for the point estimate.
  psbal::PropensityModel model = psbal::fit_logistic(ds, psbal::propensity_spec(cfg));
  psbal::WeightOptions wopt;
  wopt.trim = cfg.trim;
  psbal::WeightSet ws = psbal::balancing_weights(model, ds.group, cfg.scheme, wopt);
  psbal::EffectiveSampleSize ess = psbal::effective_sample_size(ws, ds.group);

  emit_warnings(est.warnings);

  ordered_json j = output_header(cfg);
  j["estimate"] = est.tau_hat;
  j["se"] = est.se;
  j["ci"] = {est.ci_lo, est.ci_hi};
  j["scheme"] = psbal::scheme_name(est.scheme);
  j["variance"] = psbal::variance_name(est.variance_method);
  if (est.variance_method == psbal::VarianceMethod::Bootstrap) {
    j["reps"] = est.bootstrap_reps;
    j["seed"] = est.seed;
    j["bootstrap_redraws"] = est.bootstrap_redraws;
  }
  j["n"] = ds.n_units;
  j["n_group1"] = ds.group_size(1);
  j["n_group0"] = ds.group_size(0);
  j["group1_mean"] = est.group1_mean;
  j["group0_mean"] = est.group0_mean;
  j["ess_1"] = ess.group1;
  j["ess_0"] = ess.group0;
  if (cfg.trim) j["trim"] = {cfg.trim->lo, cfg.trim->hi};
  j["warnings"] = est.warnings;

  const std::filesystem::path dir(cfg.output_dir);
  write_file(dir / "estimate.json", j.dump(2) + "\n");
  write_file(dir / "weights.csv", psbal::weights_csv(ws, ds.group, model.propensities));
  std::cout << "estimate.json written to " << cfg.output_dir << "\n";
  return 0;
}

int run_iomc(const std::string& config_path, const ScalarOverrides& ov) {
  AnalysisConfig cfg = effective_config(config_path, ov);
  psbal::Dataset ds = psbal::load_dataset(cfg.data_path, cfg.data);

  psbal::IomcOptions opt;
  opt.scheme = cfg.scheme;
  opt.bootstrap_reps = cfg.reps;
  opt.seed = cfg.seed;
  opt.trim = cfg.trim;
  psbal::IomcAnalysis res = psbal::iomc_disparity(ds, psbal::propensity_spec(cfg), opt);

  emit_warnings(res.estimate.warnings);

  ordered_json j = output_header(cfg);
  j["estimate"] = res.estimate.tau_hat;
  j["se"] = res.estimate.se;
  j["ci"] = {res.estimate.ci_lo, res.estimate.ci_hi};
  j["scheme"] = psbal::scheme_name(res.estimate.scheme);
  j["variance"] = "bootstrap";
  j["reps"] = res.estimate.bootstrap_reps;
  j["seed"] = res.estimate.seed;
  j["bootstrap_redraws"] = res.estimate.bootstrap_redraws;
  j["n"] = ds.n_units;
  j["gamma1"] = res.outcome_model.group_coef;
  j["n_replaced_identity"] = res.n_replaced_identity;
  j["ecdf_sup_distance_per_group"] = {{"group1", res.ecdf_sup_group1},
                                      {"group0", res.ecdf_sup_group0}};
  j["warnings"] = res.estimate.warnings;
  write_file(std::filesystem::path(cfg.output_dir) / "iomc.json", j.dump(2) + "\n");
  std::cout << "iomc.json written to " << cfg.output_dir << "\n";
  return 0;
}

int run_simulate(const std::string& scenario_path, int reps,
                 std::optional<std::uint64_t> seed, const std::string& output_dir) {
  psbal::Scenario sc = psbal::scenario_from_json_file(scenario_path);
  if (seed) sc.seed = *seed;

  std::ifstream in(scenario_path, std::ios::binary);
  std::string scenario_text((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  std::string hash = fnv_hex(scenario_text + "|reps=" + std::to_string(reps) +
                             "|seed=" + std::to_string(sc.seed));

  std::vector<psbal::TiltingScheme> schemes = {psbal::TiltingScheme::Combined,
                                               psbal::TiltingScheme::OneGroup,
                                               psbal::TiltingScheme::Overlap};
  psbal::StudyResult result = psbal::replicate_study(sc, reps, schemes);
  psbal::Generated gen = psbal::generate(sc);

  ordered_json j;
  j["version"] = psbal::kVersion;
  j["config_hash"] = hash;
  j["n"] = sc.n;
  j["mc_draws"] = gen.truth.mc_draws;
  j["true_tau"] = {{"ipw", gen.truth.tau_ipw},
                   {"att", gen.truth.tau_att},
                   {"ow", gen.truth.tau_ow}};
  j["true_tau_mc_se"] = {{"ipw", gen.truth.mc_se_ipw},
                         {"att", gen.truth.mc_se_att},
                         {"ow", gen.truth.mc_se_ow}};
  const std::filesystem::path dir(output_dir);
  write_file(dir / "ground_truth.json", j.dump(2) + "\n");
  write_file(dir / "results.csv", psbal::study_csv(result));
  std::cout << "results.csv and ground_truth.json written to " << output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balancing-weight estimation of controlled group differences"};
  app.require_subcommand(1);

  std::string config_path, scenario_path;
  ScalarOverrides ov;
  int bins = 20;
  bool svg = false;
  int sim_reps = 200;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_out = ".";

  auto add_common = [&](CLI::App* sub, bool with_scheme) {
    sub->add_option("config", config_path, "analysis config JSON")->required();
    sub->add_option("--output-dir", ov.output_dir, "override output directory");
    if (with_scheme) sub->add_option("--scheme", ov.scheme, "ipw, att or ow");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit the group-membership model");
  add_common(fit, false);

  CLI::App* balance = app.add_subcommand("balance", "covariate balance diagnostics");
  add_common(balance, false);
  balance->add_option("--bins", bins, "propensity histogram bins")->check(CLI::Range(2, 1000));
  balance->add_flag("--svg", svg, "also write love_plot.svg and ps_density.svg");

  CLI::App* estimate = app.add_subcommand("estimate", "weighted contrast with SE and CI");
  add_common(estimate, true);
  estimate->add_option("--variance", ov.variance, "sandwich or bootstrap");
  estimate->add_option("--reps", ov.reps, "bootstrap replicates");
  estimate->add_option("--seed", ov.seed, "bootstrap RNG seed");
  estimate->add_option("--trim", ov.trim, "propensity trim bounds lo,hi");

  CLI::App* iomc = app.add_subcommand("iomc", "rank-and-replace adjusted contrast");
  add_common(iomc, true);
  iomc->add_option("--reps", ov.reps, "bootstrap replicates");
  iomc->add_option("--seed", ov.seed, "bootstrap RNG seed");

  CLI::App* simulate = app.add_subcommand("simulate", "repeated-sampling estimator audit");
  simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  simulate->add_option("--reps", sim_reps, "number of replicates")->check(CLI::Range(2, 1000000));
  simulate->add_option("--seed", sim_seed, "override scenario seed");
  simulate->add_option("--output-dir", sim_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return run_fit(config_path, ov);
    if (balance->parsed()) return run_balance(config_path, ov, bins, svg);
    if (estimate->parsed()) return run_estimate(config_path, ov);
    if (iomc->parsed()) return run_iomc(config_path, ov);
    if (simulate->parsed()) return run_simulate(scenario_path, sim_reps, sim_seed, sim_out);
  } catch (const psbal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return psbal::errc_is_validation(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
