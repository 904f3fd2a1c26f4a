#pragma once

// RFC-4180 CSV with strict numeric parsing and shortest round-trip doubles.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ardprof {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

// Parses quoted fields (with "" escapes and embedded newlines), CRLF or LF
// line ends and a UTF-8 BOM. Every row must have as many fields as the
// header. Throws InputError naming `source` and the line.
CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const std::string& path);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal form that reads back to the same double.
std::string format_double(double value);
std::string format_int(std::int64_t value);

// Whole-string parses; no whitespace, no trailing characters.
bool parse_int(std::string_view text, std::int64_t& out);
bool parse_double(std::string_view text, double& out);

}  // namespace ardprof
