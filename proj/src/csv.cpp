#include "extasym/csv.hpp"

#include "extasym/sym_matrix.hpp"

#include <charconv>
#include <istream>
#include <ostream>

namespace extasym {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::ostream& os, const std::string& schema, int version,
                     const std::vector<std::string>& columns)
    : os_(os), width_(columns.size()) {
  os_ << "# schema: extasym." << schema << "/v" << version << "\r\n";
  row(columns);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw Error("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os_ << ',';
    os_ << csv_escape(cells[i]);
  }
  os_ << "\r\n";
}

void CsvWriter::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  row(s);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

bool read_record(std::istream& is, std::vector<std::string>& out) {
  out.clear();
  std::string cell;
  bool quoted = false, any = false;
  char ch;
  while (is.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (is.peek() == '"') {
          is.get(ch);
          cell += '"';
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (ch == '\r') {
      continue;
    } else if (ch == '\n') {
      out.push_back(cell);
      return true;
    } else {
      cell += ch;
    }
  }
  if (any) out.push_back(cell);
  return any;
}

}  // namespace

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  if (is.peek() == '#') {
    std::getline(is, t.schema);
    if (!t.schema.empty() && t.schema.back() == '\r') t.schema.pop_back();
  }
  std::vector<std::string> rec;
  if (!read_record(is, t.header)) throw Error("read_csv: missing header row");
  while (read_record(is, rec)) {
    if (rec.size() == 1 && rec[0].empty()) continue;
    t.rows.push_back(rec);
  }
  return t;
}

}  // namespace extasym
