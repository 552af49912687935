#pragma once

#include <cstdint>
#include <string>

namespace riskpipe {

// IPv4 address in host byte order.
using Ipv4 = std::uint32_t;

struct Cidr {
  Ipv4 base = 0;
  int prefix_len = 0;  // 0-32

  std::uint32_t netmask() const {
    return prefix_len == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_len);
  }
  bool contains(Ipv4 ip) const { return ((ip ^ base) & netmask()) == 0; }
  bool host_bits_clear() const { return (base & ~netmask()) == 0; }

  auto operator<=>(const Cidr&) const = default;
};

// Strict dotted-quad parsing; anything else (including IPv6) fails.
bool try_parse_ipv4(const std::string& text, Ipv4& out);
Ipv4 parse_ipv4(const std::string& text);
std::string format_ipv4(Ipv4 ip);

// "a.b.c.d/len". Does not require host bits to be clear; callers that need
// the invariant check host_bits_clear().
bool try_parse_cidr(const std::string& text, Cidr& out);
Cidr parse_cidr(const std::string& text);
std::string format_cidr(const Cidr& c);

}  // namespace riskpipe
