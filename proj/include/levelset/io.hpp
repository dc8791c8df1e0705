#pragma once

#include <string>
#include <vector>

namespace levelset {

/// Shortest decimal form that round-trips to the same double. "nan"/"inf"/"-inf" for
/// non-finite values.
std::string fmt_real(double x);

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void atomic_write(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

/// Minimal CSV table: a header and rows of raw cells. No quoting support.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, or -1.
  int column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);

}  // namespace levelset
