#include "bregdiag/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bregdiag {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void fail(const std::string& path, int line_no, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<Index>(j);
  return -1;
}

RawCsv read_csv_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  int line_no = 0;
  RawCsv table;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      fail(path, line_no,
           "expected " + std::to_string(table.header.size()) + " fields, got " +
               std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw std::runtime_error("'" + path + "' is empty");
  if (table.rows.empty()) throw std::runtime_error("'" + path + "' has a header but no data rows");
  return table;
}

CsvTable read_csv(const std::string& path) {
  const RawCsv raw = read_csv_raw(path);
  CsvTable table;
  table.header = raw.header;
  table.values.resize(static_cast<Index>(raw.rows.size()), static_cast<Index>(raw.header.size()));
  for (size_t i = 0; i < raw.rows.size(); ++i) {
    for (size_t j = 0; j < raw.rows[i].size(); ++j) {
      const auto& f = raw.rows[i][j];
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0' || errno == ERANGE)
        fail(path, raw.line_numbers[i], "not a number: '" + f + "'");
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
  }
  return table;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  if (static_cast<Index>(header.size()) != values.cols())
    throw std::invalid_argument("write_csv: header/value column mismatch");
  std::ostringstream out;
  for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  char buf[40];
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace bregdiag
