#include "riskpipe/ipv4.hpp"

#include <cstdio>

#include "riskpipe/common.hpp"

namespace riskpipe {

bool try_parse_ipv4(const std::string& text, Ipv4& out) {
  std::uint32_t value = 0;
  int octets = 0;
  std::size_t i = 0;
  while (octets < 4) {
    if (i >= text.size() || text[i] < '0' || text[i] > '9') return false;
    std::uint32_t octet = 0;
    std::size_t digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      octet = octet * 10 + static_cast<std::uint32_t>(text[i] - '0');
      ++digits;
      ++i;
      if (digits > 3 || octet > 255) return false;
    }
    value = (value << 8) | octet;
    ++octets;
    if (octets < 4) {
      if (i >= text.size() || text[i] != '.') return false;
      ++i;
    }
  }
  if (i != text.size()) return false;
  out = value;
  return true;
}

Ipv4 parse_ipv4(const std::string& text) {
  Ipv4 ip;
  if (!try_parse_ipv4(text, ip)) throw DataError("invalid IPv4 address '" + text + "'");
  return ip;
}

std::string format_ipv4(Ipv4 ip) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", (ip >> 24) & 0xff, (ip >> 16) & 0xff,
                (ip >> 8) & 0xff, ip & 0xff);
  return buf;
}

bool try_parse_cidr(const std::string& text, Cidr& out) {
  auto slash = text.find('/');
  if (slash == std::string::npos) return false;
  Ipv4 base;
  if (!try_parse_ipv4(text.substr(0, slash), base)) return false;
  std::string len = text.substr(slash + 1);
  if (len.empty() || len.size() > 2) return false;
  int prefix = 0;
  for (char c : len) {
    if (c < '0' || c > '9') return false;
    prefix = prefix * 10 + (c - '0');
  }
  if (prefix > 32) return false;
  out = Cidr{base, prefix};
  return true;
}

Cidr parse_cidr(const std::string& text) {
  Cidr c;
  if (!try_parse_cidr(text, c)) throw DataError("invalid CIDR '" + text + "'");
  return c;
}

std::string format_cidr(const Cidr& c) {
  return format_ipv4(c.base) + "/" + std::to_string(c.prefix_len);
}

}  // namespace riskpipe
