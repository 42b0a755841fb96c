#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gridthreat {

/// Fixed-point text with `decimals` digits, independent of the locale.
std::string fixed(double value, int decimals);

std::string csv_row(const std::vector<std::string>& fields);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Rows of a simple comma-separated file; blank lines and '#' lines skipped.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace gridthreat
