#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gdcert/matrix.hpp"

namespace gdcert {

// Full double precision (17 significant digits).
std::string format_double(double v);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::vector<std::string> split_fields(std::string_view line, char delim = ',');

// n x k numeric grid as delimited text; header line optional.
std::string format_table(const Matrix& m, const std::vector<std::string>& header = {});
// Reads a numeric grid. When `has_header` is true the first non-empty line
// is skipped.
Matrix parse_table(std::string_view text, bool has_header);

}  // namespace gdcert
