#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psbal/dataset.hpp"
#include "psbal/estimation.hpp"
#include "psbal/weighting.hpp"

namespace psbal {

// One analysis = one JSON config + one data file. Structural settings
// (column roles, covariate lists, encodings) live in the config; scalar
// settings may be overridden by CLI flags, and the effective values are
// hashed into every output artifact.
struct AnalysisConfig {
  std::string data_path;
  DataConfig data;
  std::vector<std::string> propensity_covariates;  // empty: all health_status
  TiltingScheme scheme = TiltingScheme::Overlap;
  VarianceMethod variance = VarianceMethod::Sandwich;
  int reps = 1000;
  std::uint64_t seed = 0;
  std::optional<TrimBounds> trim;
  std::string output_dir = ".";
};

AnalysisConfig analysis_config_from_json_text(const std::string& text);
AnalysisConfig analysis_config_from_json_file(const std::string& path);

// Covariates entering the propensity design under this config.
CovariateSpec propensity_spec(const AnalysisConfig& config);

// Canonical serialization of the effective config; equal configs produce
// byte-equal strings.
std::string canonical_config_json(const AnalysisConfig& config);

// FNV-1a 64-bit hash of the canonical serialization, as 16 hex digits.
std::string config_hash(const AnalysisConfig& config);

const char* variance_name(VarianceMethod v);
VarianceMethod variance_from_string(const std::string& s);

}  // namespace psbal
