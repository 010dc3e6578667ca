#include "duality/matrix_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace duality::io {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, std::size_t col, const std::string& msg) {
  std::ostringstream os;
  os << source << ":" << line << ":" << col << ": " << msg;
  throw ParseError(os.str());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Matrix parse_csv_matrix(const std::string& text, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string raw = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const std::string field = trim(raw);
      const std::size_t col = start + 1;
      if (field.empty()) fail(source, lineno, col, "empty field");
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end != field.c_str() + field.size() || errno == ERANGE) fail(source, lineno, col, "invalid number '" + field + "'");
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      fail(source, lineno, 1,
           "row has " + std::to_string(row.size()) + " columns, expected " + std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(source, lineno == 0 ? 1 : lineno, 1, "empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Matrix parse_json_matrix(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Byte offset -> line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(source, line, col, "malformed JSON");
  }
  if (!j.is_array() || j.empty()) fail(source, 1, 1, "expected a non-empty array of arrays");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) fail(source, 1, 1, "row 0 is not an array");
  const std::size_t width = j[0].size();
  if (width == 0) fail(source, 1, 1, "row 0 is empty");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array()) fail(source, 1, 1, "row " + std::to_string(i) + " is not an array");
    if (j[i].size() != width) {
      fail(source, 1, 1,
           "row " + std::to_string(i) + " has " + std::to_string(j[i].size()) + " entries, expected " +
               std::to_string(width));
    }
    for (std::size_t k = 0; k < width; ++k) {
      if (!j[i][k].is_number()) {
        fail(source, 1, 1, "entry (" + std::to_string(i) + ", " + std::to_string(k) + ") is not a number");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Matrix read_matrix(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError(path + ":0:0: cannot open file");
  std::ostringstream buf;
  buf << f.rdbuf();
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return json ? parse_json_matrix(buf.str(), path) : parse_csv_matrix(buf.str(), path);
}

std::string format_csv_matrix(const Matrix& m) {
  std::string out;
  char num[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      std::snprintf(num, sizeof num, "%.17g", m(i, j));
      out += num;
    }
    out += '\n';
  }
  return out;
}

}  // namespace duality::io
