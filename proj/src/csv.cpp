#include "dpc/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dpc/json_io.hpp"

namespace dpc {

size_t Csv::col(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ContractError(msg("csv: missing column '", name, "'"));
  return static_cast<size_t>(it - header.begin());
}

bool Csv::has_col(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

Csv read_csv(const std::string& path) {
  detail::count_io_op();
  std::ifstream in(path);
  if (!in) throw IoError(msg("cannot open '", path, "'"));
  Csv csv;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (lineno == 1) {
      csv.header = cells;
      continue;
    }
    if (cells.size() != csv.header.size())
      throw IoError(msg(path, ":", lineno, ": expected ", csv.header.size(),
                        " cells, got ", cells.size()));
    std::vector<double> row(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
      const char* s = cells[i].c_str();
      char* end = nullptr;
      row[i] = std::strtod(s, &end);
      if (end == s || *end != '\0')
        throw IoError(msg(path, ":", lineno, ": cell '", cells[i], "' is not a number"));
    }
    csv.rows.push_back(std::move(row));
  }
  if (csv.header.empty()) throw IoError(msg(path, ": empty file"));
  return csv;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  detail::count_io_op();
  std::ofstream out(path);
  if (!out) throw IoError(msg("cannot open '", path, "' for writing"));
  for (size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  char buf[40];
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ContractError(msg("write_csv: row width ", row.size(), " vs header ", header.size()));
    for (size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out << buf << (i + 1 < row.size() ? "," : "\n");
    }
  }
  if (!out) throw IoError(msg("write failed for '", path, "'"));
}

}  // namespace dpc
