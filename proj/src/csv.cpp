#include "rfdis/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rfdis {

namespace {

std::string_view trim(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() &&
         (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
    cell.remove_suffix(1);
  return cell;
}

double parse_cell(std::string_view cell, const std::string& path, std::size_t line,
                  std::size_t column) {
  cell = trim(cell);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value))
    fail(ErrorKind::Validation, path + ":" + std::to_string(line) + ": column " +
                                    std::to_string(column + 1) + ": non-numeric cell '" +
                                    std::string(cell) + "'");
  return value;
}

}  // namespace

Matrix read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    std::size_t column = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      row.push_back(parse_cell(cell, path, line_no, column));
      ++column;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      fail(ErrorKind::Validation, path + ":" + std::to_string(line_no) + ": expected " +
                                      std::to_string(width) + " columns, got " +
                                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::Validation, "'" + path + "' contains no data rows");
  Matrix out(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), out.row(i));
  return out;
}

std::vector<int> read_label_csv(const std::string& path) {
  const Matrix raw = read_numeric_csv(path);
  if (raw.cols() != 1)
    fail(ErrorKind::Validation, "'" + path + "' must hold one label per line, found " +
                                    std::to_string(raw.cols()) + " columns");
  std::vector<int> labels(raw.rows());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const double v = raw(i, 0);
    const int y = static_cast<int>(v);
    if (static_cast<double>(y) != v)
      fail(ErrorKind::Validation, path + ":" + std::to_string(i + 1) +
                                      ": label is not an integer");
    labels[i] = y;
  }
  return labels;
}

void write_numeric_csv(const Matrix& values, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Runtime, "cannot open '" + path + "' for writing");
  char buf[64];
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::Runtime, "write to '" + path + "' failed");
}

void write_label_csv(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Runtime, "cannot open '" + path + "' for writing");
  for (int y : labels) out << y << '\n';
  if (!out) fail(ErrorKind::Runtime, "write to '" + path + "' failed");
}

}  // namespace rfdis
