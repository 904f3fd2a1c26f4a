#include "ardprof/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ardprof/error.hpp"

namespace ardprof {

CsvTable parse_csv(std::string_view text, const std::string& source) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> starts;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool record_open = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    starts.push_back(record_line);
    record.clear();
    record_open = false;
  };

  for (std::size_t p = 0; p < text.size(); ++p) {
    const char c = text[p];
    if (!record_open) {
      record_open = true;
      record_line = line;
    }
    if (quoted) {
      if (c == '"') {
        if (p + 1 < text.size() && text[p + 1] == '"') {
          field.push_back('"');
          ++p;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          throw InputError(source + ":" + std::to_string(line) + ": stray quote inside an unquoted field");
        quoted = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (p + 1 < text.size() && text[p + 1] == '\n') break;
        throw InputError(source + ":" + std::to_string(line) + ": bare carriage return");
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field_was_quoted)
          throw InputError(source + ":" + std::to_string(line) + ": characters after a closing quote");
        field.push_back(c);
    }
  }
  if (quoted) throw InputError(source + ":" + std::to_string(record_line) + ": unterminated quoted field");
  if (record_open) end_record();

  // Drop fully blank lines.
  CsvTable table;
  bool have_header = false;
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (!have_header) {
      table.header = std::move(rec);
      have_header = true;
      continue;
    }
    if (rec.size() != table.header.size())
      throw InputError(source + ":" + std::to_string(starts[r]) + ": expected " + std::to_string(table.header.size()) +
                       " fields, found " + std::to_string(rec.size()));
    table.rows.push_back(std::move(rec));
    table.lines.push_back(starts[r]);
  }
  if (!have_header) throw InputError(source + ": file is empty");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_int(std::int64_t value) { return std::to_string(value); }

bool parse_int(std::string_view text, std::int64_t& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+' && text.size() > 1 && text[1] != '-') ++first;
  const auto res = std::from_chars(first, text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

bool parse_double(std::string_view text, double& out) {
  if (text == "NaN") {
    out = std::nan("");
    return true;
  }
  if (text == "Inf" || text == "-Inf") {
    out = text[0] == '-' ? -HUGE_VAL : HUGE_VAL;
    return true;
  }
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+' && text.size() > 1 && text[1] != '-') ++first;
  const auto res = std::from_chars(first, text.data() + text.size(), out, std::chars_format::general);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace ardprof
