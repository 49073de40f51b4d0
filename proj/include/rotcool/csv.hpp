#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rotcool {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // throws std::invalid_argument if the row width differs from the header
  void add_row(std::vector<double> row);
};

// 17 significant digits, '.' decimal point regardless of locale.
std::string format_double(double x);

// Header row, comma separated, LF line endings.
void write_csv(std::ostream& out, const CsvTable& table);
// Throws ConfigError naming the path when it cannot be written.
void emit_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable read_csv(std::istream& in);

}  // namespace rotcool
