#include "psbal/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "psbal/error.hpp"
#include "psbal/numeric.hpp"

namespace psbal {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double asd_column(const Dataset& ds, std::size_t column, const WeightSet* ws) {
  const Eigen::VectorXd x = ds.covariates.col(static_cast<Eigen::Index>(column));

  CompensatedSum num1, den1, num0, den0;
  for (std::size_t i = 0; i < ds.n_units; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    double w = ws ? ws->weights(k) : 1.0;
    if (w == 0.0) continue;
    if (ds.group[i] == 1) {
      num1.add(w * x(k));
      den1.add(w);
    } else {
      num0.add(w * x(k));
      den0.add(w);
    }
  }
  if (!(den1.value() > 0.0) || !(den0.value() > 0.0)) {
    throw_error(Errc::ZeroGroupWeight, "ASD needs positive weight in each group");
  }
  double mean1 = num1.value() / den1.value();
  double mean0 = num0.value() / den0.value();

  // Pooled denominator from unweighted within-group variances (n-1), fixed
  // across schemes.
  double var[2] = {0.0, 0.0};
  for (int g : {0, 1}) {
    CompensatedSum s, ss;
    long n = 0;
    for (std::size_t i = 0; i < ds.n_units; ++i) {
      if (ds.group[i] != g) continue;
      s.add(x(static_cast<Eigen::Index>(i)));
      ++n;
    }
    double m = s.value() / static_cast<double>(n);
    for (std::size_t i = 0; i < ds.n_units; ++i) {
      if (ds.group[i] != g) continue;
      double d = x(static_cast<Eigen::Index>(i)) - m;
      ss.add(d * d);
    }
    var[g] = n > 1 ? ss.value() / static_cast<double>(n - 1) : 0.0;
  }
  double pooled = std::sqrt(0.5 * (var[0] + var[1]));

  double diff = std::abs(mean1 - mean0);
  if (pooled == 0.0) {
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return diff / pooled;
}

double asd(const Dataset& ds, const std::string& covariate, const WeightSet* ws) {
  return asd_column(ds, ds.column_index(covariate), ws);
}

BalanceReport balance_report(const Dataset& ds, const PropensityModel& model,
                             const std::vector<TiltingScheme>& schemes,
                             double threshold) {
  BalanceReport report;
  report.threshold = threshold;

  std::vector<std::size_t> columns;
  for (const auto& src : model.selected) {
    for (std::size_t j : ds.columns_of(src)) columns.push_back(j);
  }

  std::vector<WeightSet> weight_sets;
  weight_sets.reserve(schemes.size());
  for (TiltingScheme s : schemes) {
    weight_sets.push_back(balancing_weights(model, ds.group, s));
  }

  for (std::size_t j : columns) {
    BalanceRow row;
    row.covariate = ds.covariate_names[j];
    row.unweighted = asd_column(ds, j, nullptr);
    for (std::size_t k = 0; k < schemes.size(); ++k) {
      row.by_scheme[scheme_name(schemes[k])] = asd_column(ds, j, &weight_sets[k]);
    }
    report.rows.push_back(std::move(row));
  }

  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const BalanceRow& a, const BalanceRow& b) {
                     return a.unweighted > b.unweighted;
                   });

  for (const BalanceRow& row : report.rows) {
    if (row.unweighted > threshold) {
      report.flags["unweighted"].push_back(row.covariate);
    }
    for (const auto& [name, value] : row.by_scheme) {
      if (value > threshold) report.flags[name].push_back(row.covariate);
    }
  }
  return report;
}

OverlapSummary overlap_summary(const Eigen::VectorXd& propensities,
                               const std::vector<int>& group, int bins) {
  if (bins < 2) throw_error(Errc::InvalidConfig, "histogram needs at least 2 bins");
  OverlapSummary out;
  out.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    out.bin_edges[static_cast<std::size_t>(b)] =
        static_cast<double>(b) / static_cast<double>(bins);
  }
  out.group1_counts.assign(static_cast<std::size_t>(bins), 0);
  out.group0_counts.assign(static_cast<std::size_t>(bins), 0);

  long n1 = 0, n0 = 0, tail1 = 0, tail0 = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    double e = propensities(static_cast<Eigen::Index>(i));
    int b = std::min(static_cast<int>(e * bins), bins - 1);
    bool tail = e > 0.95 || e < 0.05;
    if (group[i] == 1) {
      ++out.group1_counts[static_cast<std::size_t>(b)];
      ++n1;
      tail1 += tail;
    } else {
      ++out.group0_counts[static_cast<std::size_t>(b)];
      ++n0;
      tail0 += tail;
    }
  }
  out.group1_tail_mass = n1 > 0 ? static_cast<double>(tail1) / n1 : 0.0;
  out.group0_tail_mass = n0 > 0 ? static_cast<double>(tail0) / n0 : 0.0;
  return out;
}

std::string balance_report_csv(const BalanceReport& report) {
  std::vector<std::string> scheme_cols;
  if (!report.rows.empty()) {
    for (const auto& [name, _] : report.rows.front().by_scheme) {
      scheme_cols.push_back(name);
    }
  }
  std::string out = "covariate,unweighted";
  for (const auto& s : scheme_cols) out += "," + s;
  out += "\n";
  for (const BalanceRow& row : report.rows) {
    out += row.covariate + "," + fmt(row.unweighted);
    for (const auto& s : scheme_cols) out += "," + fmt(row.by_scheme.at(s));
    out += "\n";
  }
  return out;
}

std::string histogram_csv(const OverlapSummary& summary) {
  std::string out = "group,bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b + 1 < summary.bin_edges.size(); ++b) {
    out += "1," + fmt(summary.bin_edges[b]) + "," + fmt(summary.bin_edges[b + 1]) +
           "," + std::to_string(summary.group1_counts[b]) + "\n";
  }
  for (std::size_t b = 0; b + 1 < summary.bin_edges.size(); ++b) {
    out += "0," + fmt(summary.bin_edges[b]) + "," + fmt(summary.bin_edges[b + 1]) +
           "," + std::to_string(summary.group0_counts[b]) + "\n";
  }
  return out;
}

}  // namespace psbal
