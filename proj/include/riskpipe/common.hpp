#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace riskpipe {

// Input data violated a contract (bad file, bad value, degenerate analysis).
// The CLI maps these to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct YearMonth {
  int year = 0;
  int month = 0;  // 1-12

  auto operator<=>(const YearMonth&) const = default;
};

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  auto operator<=>(const Date&) const = default;

  YearMonth year_month() const { return {year, month}; }
};

bool is_leap_year(int year);
int days_in_month(int year, int month);

// Strict ISO parsers: "YYYY-MM-DD" and "YYYY-MM". Return false on any
// syntactic or calendar violation.
bool try_parse_date(const std::string& text, Date& out);
bool try_parse_year_month(const std::string& text, YearMonth& out);

// Throwing variants used where a bad value is a hard error.
Date parse_date(const std::string& text);
YearMonth parse_year_month(const std::string& text);

std::string to_string(const Date& d);
std::string to_string(const YearMonth& ym);

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double v);
bool try_parse_double(const std::string& text, double& out);
bool try_parse_int64(const std::string& text, std::int64_t& out);

// FNV-1a 64-bit content digest; stable across runs, not cryptographic.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);
std::string to_hex(std::uint64_t v);

}  // namespace riskpipe
