#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qbr {

// Strict numeric CSV: comma separated, mandatory header row, '.' decimal
// point, no quoting. Values written with format_g17 survive a round trip
// exactly.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // column major, data[j][i]

  int rows() const {
    return data.empty() ? 0 : static_cast<int>(data.front().size());
  }
  bool has_column(const std::string& name) const;

  // Throws io_error listing the available columns when name is absent.
  const std::vector<double>& column(const std::string& name) const;
};

// origin appears in error messages ("reading_skills.csv line 7 ...").
CsvTable read_csv(std::istream& in, const std::string& origin);
CsvTable read_csv_file(const std::string& path);

// %.17g, enough digits to reproduce the double exactly.
std::string format_g17(double x);

}  // namespace qbr
