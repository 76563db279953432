#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace lava {

/// Input error with 1-based row/column location (header is row 1).
struct CsvError : std::runtime_error {
  std::size_t row;
  std::size_t col;
  CsvError(const std::string& what, std::size_t row_, std::size_t col_)
      : std::runtime_error(what + " (row " + std::to_string(row_) + ", column " +
                           std::to_string(col_) + ")"),
        row(row_),
        col(col_) {}
};

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd data;
};

/// Strict numeric CSV: UTF-8, comma separated, '.' decimal, header row
/// required, no quoting. "inf"/"nan" parse as the IEEE values.
CsvTable read_csv_matrix(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace lava
