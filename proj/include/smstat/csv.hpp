#pragma once

// Minimal RFC 4180-style CSV reading and writing. A header row is required;
// fields are looked up by column name.

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smstat/error.hpp"

namespace smstat::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

class Table {
public:
  Table(std::vector<std::string> header, std::vector<Row> rows) : header_(std::move(header)), rows_(std::move(rows)) {
    for (std::size_t i = 0; i < header_.size(); ++i) index_.emplace(header_[i], i);
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  bool has(const std::string& column) const { return index_.contains(column); }

  std::size_t column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ParseError("missing CSV column '" + name + "'");
    return it->second;
  }

  void require(std::initializer_list<const char*> columns) const {
    for (const char* c : columns) column(c);
  }

private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Splits one record. Quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  out.push_back(std::move(cur));
  return out;
}

inline Table read(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (header.empty()) {
      if (line.empty()) throw ParseError("CSV header row is empty");
      header = split_line(line);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_line(line);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    rows.push_back({lineno, std::move(fields)});
  }
  if (header.empty()) throw ParseError("CSV input is empty (header row required)");
  return Table(std::move(header), std::move(rows));
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read(in);
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string join(std::initializer_list<std::string_view> fields) {
  std::string out;
  bool first = true;
  for (auto f : fields) {
    if (!first) out.push_back(',');
    out += quote(f);
    first = false;
  }
  return out;
}

/// Strict number parsing; the whole field must be consumed.
inline double to_double(const std::string& s, std::size_t line, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw ParseError("line " + std::to_string(line) + ": invalid " + what + " '" + s + "'");
  return v;
}

inline long long to_int(const std::string& s, std::size_t line, const char* what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw ParseError("line " + std::to_string(line) + ": invalid " + what + " '" + s + "'");
  return v;
}

/// Round-trip-exact formatting for doubles.
inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace smstat::csv
