#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace landmark::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // column index by name; throws DataError if absent
  size_t col(const std::string& name) const;
  bool has_col(const std::string& name) const;
};

// Comma-separated, UTF-8, header row required. No quoting support: the
// formats written and read here never embed commas in fields.
Table read_file(const std::string& path);

double parse_double(const std::string& s, const std::string& context);

}  // namespace landmark::csv
