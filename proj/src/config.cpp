#include "psbal/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psbal/error.hpp"

namespace psbal {

using ordered_json = nlohmann::ordered_json;

const char* variance_name(VarianceMethod v) {
  return v == VarianceMethod::Sandwich ? "sandwich" : "bootstrap";
}

VarianceMethod variance_from_string(const std::string& s) {
  if (s == "sandwich") return VarianceMethod::Sandwich;
  if (s == "bootstrap") return VarianceMethod::Bootstrap;
  throw_error(Errc::InvalidConfig,
              "unknown variance method '" + s + "' (expected sandwich or bootstrap)");
}

AnalysisConfig analysis_config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_error(Errc::InvalidConfig, std::string("config JSON parse error: ") + e.what());
  }

  try {
    AnalysisConfig cfg;
    cfg.data_path = j.at("data").get<std::string>();
    cfg.data.group_column = j.at("group").get<std::string>();
    cfg.data.outcome_column = j.at("outcome").get<std::string>();

    for (const auto& c : j.at("covariates")) {
      ColumnConfig cc;
      cc.name = c.at("name").get<std::string>();
      cc.role = role_from_string(c.at("role").get<std::string>());
      if (c.contains("encoding")) {
        const auto& enc = c.at("encoding");
        std::string type = enc.value("type", "numeric");
        if (type == "numeric") {
          cc.encoding.kind = Encoding::Kind::Numeric;
        } else if (type == "categorical") {
          cc.encoding.kind = Encoding::Kind::Categorical;
          cc.encoding.reference = enc.at("reference").get<std::string>();
          if (enc.contains("levels")) {
            for (const auto& l : enc.at("levels")) {
              cc.encoding.levels.push_back(l.get<std::string>());
            }
          }
        } else {
          throw_error(Errc::InvalidConfig,
                      "encoding type must be numeric or categorical, got '" + type + "'");
        }
      }
      cfg.data.covariates.push_back(std::move(cc));
    }

    if (j.contains("propensity_covariates")) {
      for (const auto& name : j.at("propensity_covariates")) {
        cfg.propensity_covariates.push_back(name.get<std::string>());
      }
    }
    if (j.contains("scheme")) cfg.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    if (j.contains("variance")) {
      cfg.variance = variance_from_string(j.at("variance").get<std::string>());
    }
    cfg.reps = j.value("reps", 1000);
    cfg.seed = j.value<std::uint64_t>("seed", 0);
    if (j.contains("trim")) {
      const auto& t = j.at("trim");
      if (!t.is_array() || t.size() != 2) {
        throw_error(Errc::InvalidConfig, "trim must be [lo, hi]");
      }
      cfg.trim = TrimBounds{t[0].get<double>(), t[1].get<double>()};
    }
    cfg.output_dir = j.value("output_dir", std::string("."));

    // Validate names early so the CLI can fail with exit 2 before any work.
    for (const auto& name : cfg.propensity_covariates) {
      bool found = false;
      for (const auto& cc : cfg.data.covariates) found |= (cc.name == name);
      if (!found) {
        throw_error(Errc::InvalidConfig,
                    "propensity covariate '" + name + "' is not a configured covariate");
      }
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw_error(Errc::InvalidConfig, std::string("config JSON schema error: ") + e.what());
  }
}

AnalysisConfig analysis_config_from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(Errc::InvalidConfig, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return analysis_config_from_json_text(ss.str());
}

CovariateSpec propensity_spec(const AnalysisConfig& config) {
  CovariateSpec spec;
  if (!config.propensity_covariates.empty()) {
    spec.selected = config.propensity_covariates;
    return spec;
  }
  for (const auto& cc : config.data.covariates) {
    if (cc.role == Role::HealthStatus) spec.selected.push_back(cc.name);
  }
  return spec;
}

std::string canonical_config_json(const AnalysisConfig& config) {
  ordered_json j;
  j["data"] = config.data_path;
  j["group"] = config.data.group_column;
  j["outcome"] = config.data.outcome_column;
  j["covariates"] = ordered_json::array();
  for (const auto& cc : config.data.covariates) {
    ordered_json c;
    c["name"] = cc.name;
    c["role"] = role_name(cc.role);
    if (cc.encoding.kind == Encoding::Kind::Categorical) {
      c["encoding"] = {{"type", "categorical"},
                       {"reference", cc.encoding.reference},
                       {"levels", cc.encoding.levels}};
    } else {
      c["encoding"] = {{"type", "numeric"}};
    }
    j["covariates"].push_back(c);
  }
  j["propensity_covariates"] = propensity_spec(config).selected;
  j["scheme"] = scheme_name(config.scheme);
  j["variance"] = variance_name(config.variance);
  j["reps"] = config.reps;
  j["seed"] = config.seed;
  if (config.trim) {
    j["trim"] = {config.trim->lo, config.trim->hi};
  } else {
    j["trim"] = nullptr;
  }
  return j.dump();
}

std::string config_hash(const AnalysisConfig& config) {
  std::string s = canonical_config_json(config);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace psbal
