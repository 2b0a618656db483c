#pragma once
// Plain-text matrix files: one row per line, comma-separated entries written
// with 17 significant digits so a write/read round trip is bit-exact.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "landscape/matrix.hpp"

namespace landscape::io {

void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);

std::string format_matrix(const Matrix& m);
Matrix parse_matrix(const std::string& text);

/// Throws IoError when the file cannot be opened or is malformed.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace landscape::io
