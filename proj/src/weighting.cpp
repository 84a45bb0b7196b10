#include "psbal/weighting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "psbal/error.hpp"
#include "psbal/numeric.hpp"

namespace psbal {

const char* scheme_name(TiltingScheme s) {
  switch (s) {
    case TiltingScheme::Combined: return "ipw";
    case TiltingScheme::OneGroup: return "att";
    case TiltingScheme::Overlap: return "ow";
  }
  return "?";
}

TiltingScheme scheme_from_string(const std::string& s) {
  if (s == "ipw" || s == "combined") return TiltingScheme::Combined;
  if (s == "att" || s == "onegroup") return TiltingScheme::OneGroup;
  if (s == "ow" || s == "overlap") return TiltingScheme::Overlap;
  throw_error(Errc::InvalidConfig, "unknown scheme '" + s + "' (expected ipw, att or ow)");
}

double group1_weight(TiltingScheme s, double e) {
  switch (s) {
    case TiltingScheme::Combined: return 1.0 / e;
    case TiltingScheme::OneGroup: return 1.0;
    case TiltingScheme::Overlap: return 1.0 - e;
  }
  return 0.0;
}

double group0_weight(TiltingScheme s, double e) {
  switch (s) {
    case TiltingScheme::Combined: return 1.0 / (1.0 - e);
    case TiltingScheme::OneGroup: return e / (1.0 - e);
    case TiltingScheme::Overlap: return e;
  }
  return 0.0;
}

double group1_weight_deriv(TiltingScheme s, double e) {
  switch (s) {
    case TiltingScheme::Combined: return -1.0 / (e * e);
    case TiltingScheme::OneGroup: return 0.0;
    case TiltingScheme::Overlap: return -1.0;
  }
  return 0.0;
}

double group0_weight_deriv(TiltingScheme s, double e) {
  switch (s) {
    case TiltingScheme::Combined: return 1.0 / ((1.0 - e) * (1.0 - e));
    case TiltingScheme::OneGroup: return 1.0 / ((1.0 - e) * (1.0 - e));
    case TiltingScheme::Overlap: return 1.0;
  }
  return 0.0;
}

WeightSet balancing_weights(const PropensityModel& model,
                            const std::vector<int>& group, TiltingScheme scheme,
                            const WeightOptions& options) {
  const Eigen::VectorXd& e = model.propensities;
  if (static_cast<std::size_t>(e.size()) != group.size()) {
    throw_error(Errc::DimensionMismatch,
                "propensity vector and group indicator differ in length");
  }
  if (options.trim) {
    if (!(options.trim->lo >= 0.0 && options.trim->lo < options.trim->hi &&
          options.trim->hi <= 1.0)) {
      throw_error(Errc::InvalidConfig, "trim bounds must satisfy 0 <= lo < hi <= 1");
    }
  }

  WeightSet ws;
  ws.scheme = scheme;
  ws.weights.resize(e.size());

  CompensatedSum sum1, sum0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    double ei = e(i);
    if (!(ei > 0.0 && ei < 1.0)) {
      throw_error(Errc::Separation,
                  "propensity for unit " + std::to_string(i) + " is not inside (0,1)");
    }
    if (options.trim && (ei < options.trim->lo || ei > options.trim->hi)) {
      ws.weights(i) = 0.0;
      ws.trimmed.push_back(static_cast<std::size_t>(i));
      continue;
    }
    double w = group[i] == 1 ? group1_weight(scheme, ei) : group0_weight(scheme, ei);
    ws.weights(i) = w;
    (group[i] == 1 ? sum1 : sum0).add(w);
  }
  ws.group1_weight_sum = sum1.value();
  ws.group0_weight_sum = sum0.value();

  // Extreme-weight diagnostic for the unbounded schemes. OW weights live in
  // [0,1] and are exempt.
  if (scheme != TiltingScheme::Overlap) {
    for (int g : {1, 0}) {
      double total = g == 1 ? ws.group1_weight_sum : ws.group0_weight_sum;
      std::size_t count = 0;
      for (std::size_t i = 0; i < group.size(); ++i) {
        count += (group[i] == g && ws.weights(static_cast<Eigen::Index>(i)) > 0.0);
      }
      if (count == 0) continue;
      double mean = total / static_cast<double>(count);
      for (std::size_t i = 0; i < group.size(); ++i) {
        double w = ws.weights(static_cast<Eigen::Index>(i));
        if (group[i] == g && w > options.extreme_multiple * mean) {
          ws.warnings.push_back(
              "ExtremeWeight: unit " + std::to_string(i) + " in group " +
              std::to_string(g) + " has weight " + std::to_string(w) + " > " +
              std::to_string(options.extreme_multiple) +
              "x group mean; overlap is likely poor");
        }
      }
    }
  }
  return ws;
}

EffectiveSampleSize effective_sample_size(const WeightSet& ws,
                                          const std::vector<int>& group) {
  EffectiveSampleSize out;
  for (int g : {1, 0}) {
    CompensatedSum sw, sw2;
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (group[i] != g) continue;
      double w = ws.weights(static_cast<Eigen::Index>(i));
      sw.add(w);
      sw2.add(w * w);
    }
    if (sw2.value() <= 0.0) {
      throw_error(Errc::AllZeroWeights, "group " + std::to_string(g) +
                                             " has no positive weights");
    }
    double ess = sw.value() * sw.value() / sw2.value();
    (g == 1 ? out.group1 : out.group0) = ess;
  }
  return out;
}

std::string weights_csv(const WeightSet& ws, const std::vector<int>& group,
                        const Eigen::VectorXd& propensities) {
  auto fmt = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  std::string out = "unit_id,group,propensity,weight,trimmed\n";
  std::size_t t = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    bool trimmed = t < ws.trimmed.size() && ws.trimmed[t] == i;
    if (trimmed) ++t;
    out += std::to_string(i) + "," + std::to_string(group[i]) + "," +
           fmt(propensities(static_cast<Eigen::Index>(i))) + "," +
           fmt(ws.weights(static_cast<Eigen::Index>(i))) + "," +
           (trimmed ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace psbal
