#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace riskpipe::csv {

// Line-based CSV with RFC-4180 style quoting for commas and double quotes.
// Embedded newlines inside fields are not supported; every pipeline format
// is one record per line.
std::vector<std::string> split_row(const std::string& line);
std::string join_row(const std::vector<std::string>& fields);

// Reads rows from a stream, tracking 1-based line numbers and skipping a
// trailing '\r' (CRLF input). Empty lines are skipped.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Returns false at end of input.
  bool next(std::vector<std::string>& fields);
  std::size_t line_number() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

// Reads the header row and raises DataError unless it matches `expected`
// byte for byte.
void require_header(Reader& reader, const std::string& expected, const std::string& what);

// Loads a whole CSV file (header + rows) for self-describing outputs.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
Table read_table(std::istream& in);
Table read_table_file(const std::string& path);

}  // namespace riskpipe::csv
