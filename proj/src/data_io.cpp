#include "tvar/data_io.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace tvar {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

}  // namespace

void VariableSpec::validate() const {
  if (tcode != 1 && tcode != 2 && tcode != 5 && tcode != 6)
    throw std::invalid_argument("VariableSpec " + name + ": unsupported tcode " +
                                std::to_string(tcode));
}

std::vector<VariableSpec> load_variable_specs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open variable spec file: " + path);
  nlohmann::json j;
  in >> j;
  std::vector<VariableSpec> specs;
  for (const auto& item : j) {
    VariableSpec s;
    s.name = item.at("name").get<std::string>();
    s.tcode = item.at("tcode").get<int>();
    s.display = item.value("display", s.name);
    s.validate();
    specs.push_back(std::move(s));
  }
  return specs;
}

SeriesPanel load_csv(const std::string& path, const std::vector<VariableSpec>& specs,
                     const DateRange& range) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");

  const auto header = split_csv_line(line);
  std::vector<int> col_index(specs.size(), -1);
  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (std::size_t c = 1; c < header.size(); ++c) {
      if (trim(header[c]) == specs[s].name) {
        col_index[s] = static_cast<int>(c);
        break;
      }
    }
    if (col_index[s] < 0)
      throw std::runtime_error(path + ": missing column '" + specs[s].name + "'");
  }

  std::vector<Quarter> dates;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    Quarter q;
    try {
      q = parse_quarter(trim(fields[0]));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (range.from && q < *range.from) continue;
    if (range.to && *range.to < q) continue;
    std::vector<double> row(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const std::string cell =
          col_index[s] < static_cast<int>(fields.size()) ? trim(fields[col_index[s]]) : "";
      if (cell.empty()) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": missing value in column '" + specs[s].name + "'");
      }
      try {
        row[s] = std::stod(cell);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": unparseable value '" + cell + "' in column '" +
                                 specs[s].name + "'");
      }
    }
    dates.push_back(q);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no rows in requested range");

  SeriesPanel panel;
  panel.values.resize(static_cast<Eigen::Index>(rows.size()), specs.size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t s = 0; s < specs.size(); ++s) panel.values(t, s) = rows[t][s];
  panel.dates = std::move(dates);
  for (const auto& s : specs) panel.names.push_back(s.name);
  panel.validate();
  return panel;
}

int transform_loss(int tcode) {
  switch (tcode) {
    case 1: return 0;
    case 2: return 1;
    case 5: return 1;
    case 6: return 2;
    default: throw std::invalid_argument("unsupported tcode " + std::to_string(tcode));
  }
}

VectorXd transform(const VectorXd& series, int tcode) {
  const int T = static_cast<int>(series.size());
  const int loss = transform_loss(tcode);
  if (T <= loss) throw std::invalid_argument("transform: series too short");
  if (tcode == 1) return series;
  if (tcode == 2) return series.tail(T - 1) - series.head(T - 1);
  VectorXd lg(T);
  for (int t = 0; t < T; ++t) {
    if (series[t] <= 0.0)
      throw std::domain_error("transform: non-positive value at index " +
                              std::to_string(t) + " under log tcode");
    lg[t] = std::log(series[t]);
  }
  const VectorXd d1 = lg.tail(T - 1) - lg.head(T - 1);
  if (tcode == 5) return d1;
  return d1.tail(T - 2) - d1.head(T - 2);
}

SeriesPanel transform_panel(const SeriesPanel& raw, const std::vector<VariableSpec>& specs) {
  raw.validate();
  if (raw.cols() != static_cast<int>(specs.size()))
    throw std::invalid_argument("transform_panel: spec/panel column mismatch");
  int max_loss = 0;
  for (const auto& s : specs) max_loss = std::max(max_loss, transform_loss(s.tcode));
  const int T = raw.rows() - max_loss;
  if (T < 1) throw std::invalid_argument("transform_panel: panel too short");

  SeriesPanel out;
  out.values.resize(T, raw.cols());
  for (int s = 0; s < raw.cols(); ++s) {
    const VectorXd tr = transform(raw.values.col(s), specs[s].tcode);
    out.values.col(s) = tr.tail(T);
  }
  out.names = raw.names;
  out.dates.assign(raw.dates.begin() + max_loss, raw.dates.end());
  return out;
}

std::pair<SeriesPanel, Standardization> standardize(const SeriesPanel& panel,
                                                    int stats_rows) {
  const int T = panel.rows(), n = panel.cols();
  const int W = stats_rows > 0 ? stats_rows : T;
  if (W > T) throw std::invalid_argument("standardize: stats window exceeds panel");
  Standardization stats{VectorXd(n), VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    const auto head = panel.values.col(i).head(W);
    stats.mean[i] = head.mean();
    const double var = (head.array() - stats.mean[i]).square().sum() / (W - 1);
    if (!(var > 0.0))
      throw std::invalid_argument("standardize: constant series '" + panel.names[i] + "'");
    stats.sd[i] = std::sqrt(var);
  }
  SeriesPanel out = panel;
  for (int i = 0; i < n; ++i)
    out.values.col(i) = (panel.values.col(i).array() - stats.mean[i]) / stats.sd[i];
  return {out, stats};
}

MatrixXd destandardize(const MatrixXd& values, const Standardization& stats) {
  MatrixXd out = values;
  for (int i = 0; i < out.cols(); ++i)
    out.col(i) = out.col(i).array() * stats.sd[i] + stats.mean[i];
  return out;
}

}  // namespace tvar
