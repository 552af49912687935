#include "riskpipe/common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <vector>

namespace riskpipe {

bool is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
  static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return 0;
  if (month == 2 && is_leap_year(year)) return 29;
  return days[month - 1];
}

namespace {

bool all_digits(const std::string& s, std::size_t from, std::size_t to) {
  if (to > s.size()) return false;
  for (std::size_t i = from; i < to; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

int digits_to_int(const std::string& s, std::size_t from, std::size_t to) {
  int v = 0;
  for (std::size_t i = from; i < to; ++i) v = v * 10 + (s[i] - '0');
  return v;
}

}  // namespace

bool try_parse_year_month(const std::string& text, YearMonth& out) {
  if (text.size() != 7 || text[4] != '-') return false;
  if (!all_digits(text, 0, 4) || !all_digits(text, 5, 7)) return false;
  YearMonth ym{digits_to_int(text, 0, 4), digits_to_int(text, 5, 7)};
  if (ym.month < 1 || ym.month > 12) return false;
  out = ym;
  return true;
}

bool try_parse_date(const std::string& text, Date& out) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  if (!all_digits(text, 0, 4) || !all_digits(text, 5, 7) || !all_digits(text, 8, 10))
    return false;
  Date d{digits_to_int(text, 0, 4), digits_to_int(text, 5, 7), digits_to_int(text, 8, 10)};
  if (d.month < 1 || d.month > 12) return false;
  if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return false;
  out = d;
  return true;
}

Date parse_date(const std::string& text) {
  Date d;
  if (!try_parse_date(text, d)) throw DataError("invalid date '" + text + "' (expected YYYY-MM-DD)");
  return d;
}

YearMonth parse_year_month(const std::string& text) {
  YearMonth ym;
  if (!try_parse_year_month(text, ym))
    throw DataError("invalid month '" + text + "' (expected YYYY-MM)");
  return ym;
}

std::string to_string(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string to_string(const YearMonth& ym) {
  char buf[12];
  std::snprintf(buf, sizeof buf, "%04d-%02d", ym.year, ym.month);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool try_parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

bool try_parse_int64(const std::string& text, std::int64_t& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace riskpipe
