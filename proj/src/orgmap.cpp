#include "riskpipe/orgmap.hpp"

#include <fstream>
#include <istream>

#include "riskpipe/common.hpp"
#include "riskpipe/csv.hpp"

namespace riskpipe::orgmap {

void Registry::add(Organization org) {
  if (org.org_id.empty()) throw DataError("organization with empty org_id");
  if (org.employees < 1)
    throw DataError("organization '" + org.org_id + "' has employees < 1");
  auto [it, inserted] = by_id_.emplace(org.org_id, orgs_.size());
  if (!inserted) throw DataError("duplicate org_id '" + org.org_id + "'");
  orgs_.push_back(std::move(org));
}

const Organization* Registry::find(const std::string& org_id) const {
  auto it = by_id_.find(org_id);
  return it == by_id_.end() ? nullptr : &orgs_[it->second];
}

const Organization& Registry::at(const std::string& org_id) const {
  const Organization* org = find(org_id);
  if (!org) throw DataError("unknown org_id '" + org_id + "'");
  return *org;
}

Registry load_registry(std::istream& in) {
  csv::Reader reader(in);
  csv::require_header(reader, "org_id,name,industry,employees", "orgs file");
  Registry reg;
  std::vector<std::string> f;
  while (reader.next(f)) {
    std::string where = "orgs file line " + std::to_string(reader.line_number());
    if (f.size() != 4) throw DataError(where + ": expected 4 fields, got " + std::to_string(f.size()));
    std::int64_t employees;
    if (!try_parse_int64(f[3], employees))
      throw DataError(where + ": bad employee count '" + f[3] + "'");
    if (employees < 1) throw DataError(where + ": employees < 1 for org '" + f[0] + "'");
    if (f[0].empty()) throw DataError(where + ": empty org_id");
    Organization org{f[0], f[1], f[2], employees};
    try {
      reg.add(std::move(org));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return reg;
}

Registry load_registry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open orgs file: " + path);
  return load_registry(in);
}

std::vector<IpRange> load_ipmap(std::istream& in) {
  csv::Reader reader(in);
  csv::require_header(reader, "org_id,cidr", "ipmap file");
  std::vector<IpRange> ranges;
  std::vector<std::string> f;
  while (reader.next(f)) {
    std::string where = "ipmap file line " + std::to_string(reader.line_number());
    if (f.size() != 2) throw DataError(where + ": expected 2 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw DataError(where + ": empty org_id");
    Cidr cidr;
    if (!try_parse_cidr(f[1], cidr)) throw DataError(where + ": invalid CIDR '" + f[1] + "'");
    ranges.push_back(IpRange{cidr, f[0]});
  }
  return ranges;
}

std::vector<IpRange> load_ipmap_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ipmap file: " + path);
  return load_ipmap(in);
}

IpIndex IpIndex::build(std::span<const IpRange> ranges, const Registry& registry) {
  IpIndex index;
  index.nodes_.push_back(Node{});
  std::unordered_map<std::string, std::uint32_t> ordinals;
  for (const IpRange& range : ranges) {
    if (!range.cidr.host_bits_clear())
      throw DataError("CIDR " + format_cidr(range.cidr) + " has host bits set");
    if (!registry.find(range.org_id))
      throw DataError("ipmap references unknown org_id '" + range.org_id + "'");
    std::uint32_t ord;
    auto it = ordinals.find(range.org_id);
    if (it != ordinals.end()) {
      ord = it->second;
    } else {
      ord = static_cast<std::uint32_t>(index.org_ids_.size());
      index.org_ids_.push_back(range.org_id);
      ordinals.emplace(range.org_id, ord);
    }

    std::int32_t node = 0;
    for (int bit = 0; bit < range.cidr.prefix_len; ++bit) {
      int b = (range.cidr.base >> (31 - bit)) & 1;
      if (index.nodes_[node].child[b] == kNone) {
        index.nodes_[node].child[b] = static_cast<std::int32_t>(index.nodes_.size());
        index.nodes_.push_back(Node{});
      }
      node = index.nodes_[node].child[b];
    }
    std::int32_t existing = index.nodes_[node].value;
    if (existing != kNone && static_cast<std::uint32_t>(existing) != ord)
      throw DataError("ambiguous attribution: CIDR " + format_cidr(range.cidr) +
                      " mapped to both '" + index.org_ids_[existing] + "' and '" +
                      range.org_id + "'");
    if (existing == kNone) {
      index.nodes_[node].value = static_cast<std::int32_t>(ord);
      ++index.range_count_;
    }
  }
  return index;
}

std::optional<std::uint32_t> IpIndex::resolve_ordinal(Ipv4 ip) const {
  std::int32_t node = 0;
  std::int32_t best = nodes_[0].value;
  for (int bit = 0; bit < 32; ++bit) {
    int b = (ip >> (31 - bit)) & 1;
    node = nodes_[node].child[b];
    if (node == kNone) break;
    if (nodes_[node].value != kNone) best = nodes_[node].value;
  }
  if (best == kNone) return std::nullopt;
  return static_cast<std::uint32_t>(best);
}

std::optional<std::string_view> IpIndex::resolve(Ipv4 ip) const {
  auto ord = resolve_ordinal(ip);
  if (!ord) return std::nullopt;
  return std::string_view(org_ids_[*ord]);
}

}  // namespace riskpipe::orgmap
