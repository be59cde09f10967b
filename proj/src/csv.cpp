#include "csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "errors.hpp"

namespace qbr {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& what) {
  std::ostringstream os;
  os << origin << " line " << line << ": " << what;
  throw io_error(os.str());
}

}  // namespace

bool CsvTable::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] == name) return data[j];
  }
  std::ostringstream os;
  os << "no column named '" << name << "'; available:";
  for (const auto& c : columns) os << " " << c;
  throw io_error(os.str());
}

CsvTable read_csv(std::istream& in, const std::string& origin) {
  CsvTable table;
  std::string line;
  int lineno = 0;

  if (!std::getline(in, line)) {
    fail(origin, 1, "empty input, expected a header row");
  }
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.columns = split_fields(line);
  for (size_t j = 0; j < table.columns.size(); ++j) {
    if (table.columns[j].empty()) {
      fail(origin, lineno, "empty column name in header");
    }
    for (size_t k = 0; k < j; ++k) {
      if (table.columns[k] == table.columns[j]) {
        fail(origin, lineno,
             "duplicate column name '" + table.columns[j] + "'");
      }
    }
  }
  table.data.assign(table.columns.size(), {});

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    auto fields = split_fields(line);
    if (fields.size() != table.columns.size()) {
      std::ostringstream os;
      os << "expected " << table.columns.size() << " fields, found "
         << fields.size();
      fail(origin, lineno, os.str());
    }
    for (size_t j = 0; j < fields.size(); ++j) {
      const std::string& f = fields[j];
      double value = 0.0;
      auto res = std::from_chars(f.data(), f.data() + f.size(), value);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        fail(origin, lineno,
             "cannot parse '" + f + "' in column '" + table.columns[j] +
                 "' as a number");
      }
      table.data[j].push_back(value);
    }
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open '" + path + "' for reading");
  }
  return read_csv(in, path);
}

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace qbr
