#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tvar/var_data.hpp"

namespace tvar {

// Tcode: 1: none; 2: first difference; 5: diff of logs; 6: second diff of logs.
struct VariableSpec {
  std::string name;
  int tcode = 1;
  std::string display;

  void validate() const;
};

// Loads a variable spec from JSON: [{"name": ..., "tcode": ..., "display": ...}, ...]
std::vector<VariableSpec> load_variable_specs(const std::string& path);

struct DateRange {
  std::optional<Quarter> from;
  std::optional<Quarter> to;
};

// Raw (untransformed) panel from a quarterly CSV with a date column first.
// Columns are returned in spec order; errors name the offending row/column.
SeriesPanel load_csv(const std::string& path, const std::vector<VariableSpec>& specs,
                     const DateRange& range = {});

// Output is shorter by 0/1/1/2 observations for tcodes 1/2/5/6.
VectorXd transform(const VectorXd& series, int tcode);
int transform_loss(int tcode);

// Transform every column and truncate to the common latest start so dates align.
SeriesPanel transform_panel(const SeriesPanel& raw, const std::vector<VariableSpec>& specs);

struct Standardization {
  VectorXd mean;
  VectorXd sd;
};

// Statistics from rows [0, stats_rows) only; stats_rows <= 0 uses all rows.
std::pair<SeriesPanel, Standardization> standardize(const SeriesPanel& panel,
                                                    int stats_rows = 0);

MatrixXd destandardize(const MatrixXd& values, const Standardization& stats);

}  // namespace tvar
