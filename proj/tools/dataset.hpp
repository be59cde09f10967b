#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cli_error.hpp"

namespace cli {

// Column-major numeric table read from a strict CSV dialect: comma
// separators, a mandatory header row, '.' as the decimal mark, no quoting.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }

  const std::vector<double>& column(const std::string& name,
                                    const std::string& flag) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == name) return data[j];
    }
    std::string msg = flag + ": column '" + name + "' not found; available:";
    for (const std::string& c : columns) msg += " " + c;
    throw CliError{2, msg};
  }
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_field(const std::string& field, const std::string& origin,
                          std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw CliError{2, origin + " line " + std::to_string(line_no) +
                          ": cannot parse '" + field + "' in column '" +
                          column + "' as a number"};
  }
  return value;
}

}  // namespace detail

inline Dataset read_dataset(std::istream& in, const std::string& origin) {
  Dataset table;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line))
    throw CliError{2, origin + ": empty input, a header row is required"};
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.columns = detail::split_fields(line);
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (table.columns[j].empty()) {
      throw CliError{2, origin + ": header field " + std::to_string(j + 1) +
                            " is empty"};
    }
    for (std::size_t k = 0; k < j; ++k) {
      if (table.columns[k] == table.columns[j]) {
        throw CliError{2, origin + ": duplicate header name '" +
                              table.columns[j] + "'"};
      }
    }
  }
  table.data.assign(table.columns.size(), {});

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    std::vector<std::string> fields = detail::split_fields(line);
    if (fields.size() != table.columns.size()) {
      throw CliError{2, origin + " line " + std::to_string(line_no) + ": " +
                            std::to_string(fields.size()) +
                            " fields, expected " +
                            std::to_string(table.columns.size())};
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      table.data[j].push_back(detail::parse_field(fields[j], origin, line_no,
                                                  table.columns[j]));
    }
  }
  return table;
}

inline Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw CliError{2, "cannot open '" + path + "' for reading"};
  return read_dataset(in, path);
}

// Shortest representation that round-trips a double exactly.
inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_dataset(std::ostream& out, const Dataset& table) {
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j > 0) out << ',';
    out << table.columns[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < table.data.size(); ++j) {
      if (j > 0) out << ',';
      out << format_number(table.data[j][i]);
    }
    out << '\n';
  }
}

}  // namespace cli
