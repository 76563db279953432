#include "lava/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lava {

namespace {

std::vector<std::string> split_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) throw CsvError("empty cell", row, col);
  double value = 0.0;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw CsvError("not a number: '" + cell + "'", row, col);
  }
  return value;
}

}  // namespace

CsvTable read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open file: " + path, 0, 0);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw CsvError("missing header row", 1, 1);
  table.header = split_line(line);
  const std::size_t width = table.header.size();
  if (width == 0) throw CsvError("empty header", 1, 1);

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != width) {
      throw CsvError("expected " + std::to_string(width) + " cells, got " +
                         std::to_string(cells.size()),
                     lineno, cells.size());
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      row[c] = parse_cell(cells[c], lineno, c + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("no data rows", 2, 1);
  table.data.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      table.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }
  return table;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lava
