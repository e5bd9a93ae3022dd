#pragma once

#include <string>
#include <vector>

#include "bregdiag/types.hpp"

namespace bregdiag {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  /// Column index by header name; -1 when absent.
  Index column(const std::string& name) const;
};

/// Reads a numeric CSV with a header row. Malformed input reports the file
/// and 1-based line number.
CsvTable read_csv(const std::string& path);

/// Header + untyped cells, for tables with text columns.
struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row
};

RawCsv read_csv_raw(const std::string& path);

/// Writes header + values with full double precision, atomically
/// (temp file + rename).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);

/// Atomic text-file write.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bregdiag
