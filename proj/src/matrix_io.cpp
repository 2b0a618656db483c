#include "landscape/matrix_io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "landscape/error.hpp"

namespace landscape::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_entry(const std::string& field, std::size_t line_no) {
  const std::string f = trim(field);
  if (f.empty()) throw IoError("empty matrix entry on line " + std::to_string(line_no));
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(f.c_str(), &end);
  if (end != f.c_str() + f.size() || errno == ERANGE) {
    throw IoError("malformed matrix entry '" + f + "' on line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

void write_matrix(std::ostream& os, const Matrix& m) {
  char buf[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

Matrix read_matrix(std::istream& is) {
  std::vector<double> entries;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t fields = 0;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      entries.push_back(parse_entry(field, line_no));
      ++fields;
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw IoError("line " + std::to_string(line_no) + " has " + std::to_string(fields) +
                    " entries, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw IoError("matrix text is empty");
  Matrix m(rows, cols, std::move(entries));
  require_finite(m, "matrix file");
  return m;
}

std::string format_matrix(const Matrix& m) {
  std::ostringstream os;
  write_matrix(os, m);
  return os.str();
}

Matrix parse_matrix(const std::string& text) {
  std::istringstream is(text);
  return read_matrix(is);
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  write_matrix(os, m);
  if (!os) throw IoError("write failed for " + path.string());
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  try {
    return read_matrix(is);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace landscape::io
