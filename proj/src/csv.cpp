#include "riskpipe/csv.hpp"

#include <fstream>
#include <istream>

#include "riskpipe/common.hpp"

namespace riskpipe::csv {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out.push_back('"');
      for (char c : f) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    } else {
      out += f;
    }
  }
  return out;
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields = split_row(line);
    return true;
  }
  return false;
}

void require_header(Reader& reader, const std::string& expected, const std::string& what) {
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw DataError(what + ": empty input, expected header '" + expected + "'");
  std::string got = join_row(fields);
  if (got != expected)
    throw DataError(what + ": bad header '" + got + "', expected '" + expected + "'");
}

Table read_table(std::istream& in) {
  Table t;
  Reader r(in);
  std::vector<std::string> fields;
  if (!r.next(fields)) throw DataError("empty CSV input");
  t.header = fields;
  while (r.next(fields)) t.rows.push_back(fields);
  return t;
}

Table read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return read_table(in);
}

}  // namespace riskpipe::csv
