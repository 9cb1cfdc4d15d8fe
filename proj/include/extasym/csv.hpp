#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace extasym {

/// Shortest round-trip decimal form ("%.17g"), so equal doubles always
/// print the same bytes.
std::string format_double(double v);

/// RFC-4180 style writer. The first line declares the schema as
/// "# schema: extasym.<name>/v<version>", the second is the header row.
class CsvWriter {
public:
  CsvWriter(std::ostream& os, const std::string& schema, int version, const std::vector<std::string>& columns);

  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);

private:
  std::ostream& os_;
  std::size_t width_;
};

std::string csv_escape(const std::string& cell);

/// Parses a CSV written by CsvWriter: skips the schema line and returns the
/// header row followed by the data rows. Quoted cells are unescaped.
struct CsvTable {
  std::string schema;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;
};

CsvTable read_csv(std::istream& is);

}  // namespace extasym
