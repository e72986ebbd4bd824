#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace corrcg {

/// Shortest round-trip decimal form, locale independent.
std::string format_double(double x);

/// Comma-separated table with a header row and LF line endings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string str() const;
};

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace corrcg
