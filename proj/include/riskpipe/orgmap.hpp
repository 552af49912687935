#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "riskpipe/ipv4.hpp"

namespace riskpipe::orgmap {

struct Organization {
  std::string org_id;
  std::string name;
  std::string industry;
  std::int64_t employees = 0;  // >= 1
};

class Registry {
 public:
  void add(Organization org);  // throws DataError on duplicate org_id

  const Organization* find(const std::string& org_id) const;
  const Organization& at(const std::string& org_id) const;
  std::size_t size() const { return orgs_.size(); }
  bool empty() const { return orgs_.empty(); }
  // Insertion order (file order).
  const std::vector<Organization>& organizations() const { return orgs_; }

 private:
  std::vector<Organization> orgs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct IpRange {
  Cidr cidr;
  std::string org_id;
};

// orgs file: header `org_id,name,industry,employees`. Any invalid row is a
// hard error with its line number; registries are small, curated inputs.
Registry load_registry(std::istream& in);
Registry load_registry_file(const std::string& path);

// ipmap file: header `org_id,cidr`.
std::vector<IpRange> load_ipmap(std::istream& in);
std::vector<IpRange> load_ipmap_file(const std::string& path);

// Immutable binary prefix trie over IPv4 ranges answering longest-prefix
// queries. Concurrent lookups are safe after construction.
class IpIndex {
 public:
  static IpIndex build(std::span<const IpRange> ranges, const Registry& registry);

  // org ordinal with the longest matching prefix, or nothing.
  std::optional<std::uint32_t> resolve_ordinal(Ipv4 ip) const;
  std::optional<std::string_view> resolve(Ipv4 ip) const;

  const std::string& org_id(std::uint32_t ordinal) const { return org_ids_[ordinal]; }
  std::size_t range_count() const { return range_count_; }

 private:
  static constexpr std::int32_t kNone = -1;
  struct Node {
    std::int32_t child[2] = {kNone, kNone};
    std::int32_t value = kNone;  // org ordinal
  };

  std::vector<Node> nodes_;
  std::vector<std::string> org_ids_;
  std::size_t range_count_ = 0;
};

}  // namespace riskpipe::orgmap
