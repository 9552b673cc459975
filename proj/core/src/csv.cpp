#include "mvrff/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mvrff {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int row, int col, const std::string& what) {
  throw Error("ParseError",
              path + ":" + std::to_string(row) + ":" + std::to_string(col) + ": " + what);
}

// Strict full-cell double parse.
double parse_cell(const std::string& cell, const std::string& path, int row, int col) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  if (b != e && *b == '+') ++b;  // from_chars rejects a leading '+'
  double v = 0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e || b == e)
    parse_fail(path, row, col, "not a number: '" + cell + "'");
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (in.bad()) throw Error("IoError", "read failure on " + path);
  // ignore trailing blank lines
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error("ParseError", path + ": empty file");
  return lines;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

NumericTable read_numeric_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  NumericTable t;
  t.header = split_csv_line(lines[0]);
  const int cols = static_cast<int>(t.header.size());
  const int rows = static_cast<int>(lines.size()) - 1;
  require(rows > 0, "ParseError", path + ": no data rows");
  t.values.resize(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const std::vector<std::string> cells = split_csv_line(lines[static_cast<size_t>(i) + 1]);
    if (static_cast<int>(cells.size()) != cols)
      parse_fail(path, i + 2, 1,
                 "expected " + std::to_string(cols) + " cells, got " +
                     std::to_string(cells.size()));
    for (int j = 0; j < cols; ++j)
      t.values(i, j) = parse_cell(cells[static_cast<size_t>(j)], path, i + 2, j + 1);
  }
  return t;
}

void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const Matrix& values) {
  require(static_cast<int>(header.size()) == values.cols(), "InvalidArgument",
          "header width does not match matrix");
  std::ostringstream out;
  for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (int i = 0; i < values.rows(); ++i) {
    for (int j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("IoError", "cannot write " + path);
  f << out.str();
  if (!f) throw Error("IoError", "write failure on " + path);
}

LabelTable read_label_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  LabelTable t;
  std::vector<std::string> head = split_csv_line(lines[0]);
  if (head.size() != 1) parse_fail(path, 1, 2, "expected a single column");
  t.name = head[0];
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> cells = split_csv_line(lines[i]);
    if (cells.size() != 1) parse_fail(path, static_cast<int>(i) + 1, 2, "expected a single column");
    t.values.push_back(std::move(cells[0]));
  }
  require(!t.values.empty(), "ParseError", path + ": no data rows");
  return t;
}

void write_label_csv(const std::string& path, const LabelTable& table) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("IoError", "cannot write " + path);
  f << table.name << '\n';
  for (const std::string& v : table.values) f << v << '\n';
  if (!f) throw Error("IoError", "write failure on " + path);
}

std::vector<std::pair<std::string, std::string>> read_pair_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<std::pair<std::string, std::string>> out;
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> cells = split_csv_line(lines[i]);
    if (cells.size() != 2) parse_fail(path, static_cast<int>(i) + 1, 2, "expected two columns");
    out.emplace_back(std::move(cells[0]), std::move(cells[1]));
  }
  require(!out.empty(), "ParseError", path + ": no data rows");
  return out;
}

}  // namespace mvrff
