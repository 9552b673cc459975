#pragma once

#include <string>
#include <vector>

#include "mvrff/types.hpp"

namespace mvrff {

// All CSV files carry a header row.  Numeric cells must parse fully as
// doubles; failures raise ParseError with 1-based row/column coordinates.
struct NumericTable {
  std::vector<std::string> header;
  Matrix values;
};

NumericTable read_numeric_csv(const std::string& path);
void write_numeric_csv(const std::string& path,
                       const std::vector<std::string>& header,
                       const Matrix& values);

// Single string column (categorical outcomes, predicted labels).
struct LabelTable {
  std::string name;
  std::vector<std::string> values;
};
LabelTable read_label_csv(const std::string& path);
void write_label_csv(const std::string& path, const LabelTable& table);

// Two string columns (variable name, group id).
std::vector<std::pair<std::string, std::string>> read_pair_csv(
    const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace mvrff
