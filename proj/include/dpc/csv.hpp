#pragma once

#include <string>
#include <vector>

#include "dpc/errors.hpp"

namespace dpc {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Column lookup by header name; ContractError when absent.
  size_t col(const std::string& name) const;
  bool has_col(const std::string& name) const;
};

// Numeric CSV with a header line. Values print with 17 significant digits so
// doubles survive a write/read round trip bit-exactly. Parse failures name
// the offending 1-based line.
Csv read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace dpc
