#include "psbal/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "psbal/error.hpp"

namespace psbal {

const char* role_name(Role r) {
  return r == Role::HealthStatus ? "health_status" : "ses";
}

Role role_from_string(const std::string& s) {
  if (s == "health_status") return Role::HealthStatus;
  if (s == "ses") return Role::Ses;
  throw_error(Errc::InvalidConfig,
              "unknown covariate role '" + s + "' (expected health_status or ses)");
}

std::size_t Dataset::group_size(int g) const {
  std::size_t n = 0;
  for (int z : group) n += (z == g);
  return n;
}

std::vector<std::size_t> Dataset::group_indices(int g) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] == g) idx.push_back(i);
  }
  return idx;
}

std::vector<std::size_t> Dataset::columns_of(const std::string& source_name) const {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < source_names.size(); ++j) {
    if (source_names[j] == source_name) idx.push_back(j);
  }
  return idx;
}

std::size_t Dataset::column_index(const std::string& expanded_name) const {
  for (std::size_t j = 0; j < covariate_names.size(); ++j) {
    if (covariate_names[j] == expanded_name) return j;
  }
  throw_error(Errc::MissingColumn, "no covariate column '" + expanded_name + "'");
}

std::vector<std::size_t> Dataset::columns_with_role(Role r) const {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < roles.size(); ++j) {
    if (roles[j] == r) idx.push_back(j);
  }
  return idx;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".";
}

double parse_double(const std::string& s, std::size_t row, const std::string& col) {
  if (is_missing_token(s)) {
    throw_error(Errc::MissingValue,
                "missing value at row " + std::to_string(row) + ", column '" + col + "'");
  }
  const char* begin = s.data();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size() || errno == ERANGE) {
    throw_error(Errc::MissingValue,
                "non-numeric value '" + s + "' at row " + std::to_string(row) +
                    ", column '" + col + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_dataset_from_text(const std::string& csv_text, const DataConfig& config) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) {
    throw_error(Errc::MissingColumn, "empty input: no header row");
  }
  std::vector<std::string> header = split_line(line);

  auto find_col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw_error(Errc::MissingColumn, "column '" + name + "' not found in header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t group_idx = find_col(config.group_column);
  const std::size_t outcome_idx = find_col(config.outcome_column);
  std::vector<std::size_t> cov_idx;
  cov_idx.reserve(config.covariates.size());
  for (const auto& cc : config.covariates) cov_idx.push_back(find_col(cc.name));

  std::vector<int> group;
  std::vector<double> outcome;
  // Raw cells per configured covariate; categorical expansion happens after
  // the full pass so data-discovered levels are deterministic.
  std::vector<std::vector<std::string>> raw(config.covariates.size());

  std::size_t row = 0;  // 1-based data row for error messages
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    ++row;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw_error(Errc::MissingValue,
                  "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }

    double z = parse_double(fields[group_idx], row, config.group_column);
    if (z != 0.0 && z != 1.0) {
      throw_error(Errc::NonBinaryGroup,
                  "group value '" + fields[group_idx] + "' at row " + std::to_string(row) +
                      " (expected 0 or 1)");
    }
    group.push_back(static_cast<int>(z));
    outcome.push_back(parse_double(fields[outcome_idx], row, config.outcome_column));

    for (std::size_t k = 0; k < config.covariates.size(); ++k) {
      const std::string& cell = fields[cov_idx[k]];
      if (is_missing_token(cell)) {
        throw_error(Errc::MissingValue,
                    "missing value at row " + std::to_string(row) + ", column '" +
                        config.covariates[k].name + "'");
      }
      raw[k].push_back(cell);
    }
  }

  const std::size_t n = group.size();
  if (n == 0) throw_error(Errc::EmptyGroup, "no data rows");
  std::size_t n1 = 0;
  for (int z : group) n1 += static_cast<std::size_t>(z);
  if (n1 == 0) throw_error(Errc::EmptyGroup, "group 1 has no units");
  if (n1 == n) throw_error(Errc::EmptyGroup, "group 0 has no units");

  Dataset ds;
  ds.n_units = n;
  ds.group = std::move(group);
  ds.outcome = Eigen::Map<const Eigen::VectorXd>(outcome.data(),
                                                 static_cast<Eigen::Index>(n));
  ds.group_column_name = config.group_column;
  ds.outcome_column_name = config.outcome_column;

  std::vector<std::vector<double>> cols;
  for (std::size_t k = 0; k < config.covariates.size(); ++k) {
    const ColumnConfig& cc = config.covariates[k];
    if (cc.encoding.kind == Encoding::Kind::Numeric) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) {
        col[i] = parse_double(raw[k][i], i + 1, cc.name);
      }
      cols.push_back(std::move(col));
      ds.covariate_names.push_back(cc.name);
      ds.source_names.push_back(cc.name);
      ds.roles.push_back(cc.role);
    } else {
      std::vector<std::string> levels = cc.encoding.levels;
      if (levels.empty()) {
        std::set<std::string> uniq(raw[k].begin(), raw[k].end());
        levels.assign(uniq.begin(), uniq.end());
      }
      if (std::find(levels.begin(), levels.end(), cc.encoding.reference) == levels.end()) {
        throw_error(Errc::InvalidConfig,
                    "reference level '" + cc.encoding.reference + "' for covariate '" +
                        cc.name + "' is not among its levels");
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(levels.begin(), levels.end(), raw[k][i]) == levels.end()) {
          throw_error(Errc::InvalidConfig,
                      "value '" + raw[k][i] + "' at row " + std::to_string(i + 1) +
                          " is not a declared level of covariate '" + cc.name + "'");
        }
      }
      for (const std::string& level : levels) {
        if (level == cc.encoding.reference) continue;
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = (raw[k][i] == level) ? 1.0 : 0.0;
        cols.push_back(std::move(col));
        ds.covariate_names.push_back(cc.name + "=" + level);
        ds.source_names.push_back(cc.name);
        ds.roles.push_back(cc.role);
      }
    }
  }

  ds.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    ds.covariates.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(cols[j].data(), static_cast<Eigen::Index>(n));
  }
  return ds;
}

Dataset load_dataset(const std::string& path, const DataConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(Errc::InvalidConfig, "cannot open data file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_dataset_from_text(ss.str(), config);
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  out += ds.group_column_name.empty() ? "z" : ds.group_column_name;
  out += ',';
  out += ds.outcome_column_name.empty() ? "y" : ds.outcome_column_name;
  for (const auto& name : ds.covariate_names) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t i = 0; i < ds.n_units; ++i) {
    out += ds.group[i] ? '1' : '0';
    out += ',';
    out += format_double(ds.outcome(static_cast<Eigen::Index>(i)));
    for (Eigen::Index j = 0; j < ds.covariates.cols(); ++j) {
      out += ',';
      out += format_double(ds.covariates(static_cast<Eigen::Index>(i), j));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(Errc::InvalidConfig, "cannot open '" + path + "' for writing");
  out << to_csv(ds);
}

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.n_units = rows.size();
  out.group.reserve(rows.size());
  out.outcome.resize(static_cast<Eigen::Index>(rows.size()));
  out.covariates.resize(static_cast<Eigen::Index>(rows.size()), ds.covariates.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.group.push_back(ds.group[rows[i]]);
    out.outcome(static_cast<Eigen::Index>(i)) = ds.outcome(r);
    out.covariates.row(static_cast<Eigen::Index>(i)) = ds.covariates.row(r);
  }
  out.covariate_names = ds.covariate_names;
  out.source_names = ds.source_names;
  out.roles = ds.roles;
  out.group_column_name = ds.group_column_name;
  out.outcome_column_name = ds.outcome_column_name;
  return out;
}

Eigen::MatrixXd design_matrix(const Dataset& ds, const CovariateSpec& spec) {
  std::vector<std::size_t> cols;
  for (const auto& name : spec.selected) {
    std::vector<std::size_t> idx = ds.columns_of(name);
    if (idx.empty()) {
      throw_error(Errc::MissingColumn, "covariate '" + name + "' not in dataset");
    }
    cols.insert(cols.end(), idx.begin(), idx.end());
  }
  const auto n = static_cast<Eigen::Index>(ds.n_units);
  Eigen::MatrixXd X(n, 1 + static_cast<Eigen::Index>(cols.size()));
  X.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    X.col(1 + static_cast<Eigen::Index>(j)) =
        ds.covariates.col(static_cast<Eigen::Index>(cols[j]));
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    throw_error(Errc::RankDeficient,
                "design matrix rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(X.cols()) +
                    " columns (constant or collinear covariate)");
  }
  return X;
}

std::vector<std::string> design_column_names(const Dataset& ds, const CovariateSpec& spec) {
  std::vector<std::string> names;
  names.push_back("(intercept)");
  for (const auto& name : spec.selected) {
    for (std::size_t j : ds.columns_of(name)) names.push_back(ds.covariate_names[j]);
  }
  return names;
}

}  // namespace psbal
