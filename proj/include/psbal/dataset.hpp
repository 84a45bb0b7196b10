#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace psbal {

enum class Role { HealthStatus, Ses };

const char* role_name(Role r);
Role role_from_string(const std::string& s);

// Encoding rule for one source column.
struct Encoding {
  enum class Kind { Numeric, Categorical };
  Kind kind = Kind::Numeric;
  // Categorical only: the reference level is dropped from the one-hot block
  // so the design stays full rank. `levels` fixes the column order; when
  // empty, levels are the sorted distinct values found in the data.
  std::string reference;
  std::vector<std::string> levels;
};

struct ColumnConfig {
  std::string name;
  Role role = Role::HealthStatus;
  Encoding encoding;
};

struct DataConfig {
  std::string group_column;
  std::string outcome_column;
  std::vector<ColumnConfig> covariates;
};

// Immutable analysis dataset. Categorical covariates are already expanded
// into indicator columns; `source_names` maps each expanded column back to
// the configured covariate it came from.
struct Dataset {
  std::size_t n_units = 0;
  std::vector<int> group;      // binary membership indicator per unit
  Eigen::VectorXd outcome;
  Eigen::MatrixXd covariates;  // n_units x n_columns, expanded
  std::vector<std::string> covariate_names;  // expanded, e.g. "region=east"
  std::vector<std::string> source_names;     // configured name per column
  std::vector<Role> roles;                   // per expanded column
  std::string group_column_name;
  std::string outcome_column_name;

  std::size_t group_size(int g) const;
  std::vector<std::size_t> group_indices(int g) const;
  // Expanded column indices for a configured covariate name, in stored order.
  std::vector<std::size_t> columns_of(const std::string& source_name) const;
  // Index of an expanded column; throws MissingColumn if absent.
  std::size_t column_index(const std::string& expanded_name) const;
  std::vector<std::size_t> columns_with_role(Role r) const;
};

// Covariates entering the propensity design, by configured (source) name.
struct CovariateSpec {
  std::vector<std::string> selected;
};

Dataset load_dataset(const std::string& path, const DataConfig& config);
Dataset load_dataset_from_text(const std::string& csv_text,
                               const DataConfig& config);

// Shortest-round-trip formatting; reloading reproduces values bit-for-bit.
void write_csv(const Dataset& ds, const std::string& path);
std::string to_csv(const Dataset& ds);

// Row subset / resample (indices may repeat); preserves column metadata.
Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows);

// Intercept column followed by the selected covariates' expanded columns in
// spec order. Throws RankDeficient if any column is constant or an exact
// linear combination of the others (pivoted QR, tolerance 1e-10).
Eigen::MatrixXd design_matrix(const Dataset& ds, const CovariateSpec& spec);

// Expanded column names matching design_matrix order, intercept first.
std::vector<std::string> design_column_names(const Dataset& ds,
                                             const CovariateSpec& spec);

}  // namespace psbal
