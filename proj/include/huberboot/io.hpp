#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "huberboot/dataset.hpp"
#include "huberboot/multitest.hpp"

namespace huberboot {

// Numeric CSV with a header row. Cells are parsed as doubles; anything else
// is a parse_error that names the offending row and column.
struct CsvTable {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;  // one row per data line, column order as in the header
};

CsvTable load_csv(std::istream& is, const std::string& source_name = "<input>");
CsvTable load_csv_file(const std::string& path);

// Single-response layout: the named response column plus every remaining
// column as the design, optionally behind a prepended intercept column.
Dataset dataset_from_table(const CsvTable& table, const std::string& response = "y",
                           bool add_intercept = false);

// Panel layout for simultaneous tests: every column whose name starts with
// the prefix is a response; the rest are shared covariates.
PanelData panel_from_table(const CsvTable& table, const std::string& response_prefix = "y");

void save_dataset(const Dataset& data, std::ostream& os, const std::string& response = "y");

// 17 significant digits, enough to round-trip any double.
std::string format_full(double v);

}  // namespace huberboot
