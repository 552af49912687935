#include "riskpipe/riskvectors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include "riskpipe/csv.hpp"

namespace riskpipe::riskvectors {

const char* to_token(ServiceClass c) {
  switch (c) {
    case ServiceClass::Risky: return "risky";
    case ServiceClass::Neutral: return "neutral";
    case ServiceClass::Reasonable: return "reasonable";
    case ServiceClass::Unclassified: return "unclassified";
  }
  return "?";
}

std::set<ConfigError> classify_tls_config(const ingest::TlsObservation& obs) {
  std::set<ConfigError> errors;
  if (obs.tls_version <= ingest::TlsVersion::SSLv3) errors.insert(ConfigError::ObsoleteVersion);
  if (obs.heartbleed) errors.insert(ConfigError::Heartbleed);
  if (obs.freak) errors.insert(ConfigError::Freak);
  if (obs.dh_bits > 0 && obs.dh_bits < 2048) errors.insert(ConfigError::WeakDhBits);
  if (obs.dh_common_prime) errors.insert(ConfigError::CommonDhPrime);
  return errors;
}

std::set<CertError> classify_tls_cert(const ingest::TlsObservation& obs) {
  std::set<CertError> errors;
  if (obs.self_signed) errors.insert(CertError::SelfSigned);
  if (obs.scan_date > obs.not_after) errors.insert(CertError::Expired);
  if (obs.not_before > obs.scan_date) errors.insert(CertError::FutureIssued);
  if (obs.nonstandard_root) errors.insert(CertError::NonstandardRoot);
  if (obs.chain_broken) errors.insert(CertError::ChainBroken);
  bool weak_key = (obs.key_algo == ingest::KeyAlgo::RSA || obs.key_algo == ingest::KeyAlgo::DSA)
                      ? obs.key_bits <= 1024
                      : obs.key_bits < 224;
  if (weak_key) errors.insert(CertError::WeakKey);
  if (obs.sig_algo == ingest::SigAlgo::SHA1 || obs.sig_algo == ingest::SigAlgo::MD5 ||
      obs.sig_algo == ingest::SigAlgo::MD2)
    errors.insert(CertError::WeakSignature);
  return errors;
}

namespace {

constexpr std::array<std::pair<const char*, ServiceClass>, 21> kServiceTable{{
    {"FTP", ServiceClass::Risky},
    {"TELNET", ServiceClass::Risky},
    {"SMTP", ServiceClass::Risky},
    {"POP3", ServiceClass::Risky},
    {"SUNRPC", ServiceClass::Risky},
    {"NETBIOS", ServiceClass::Risky},
    {"IMAP", ServiceClass::Risky},
    {"SNMP", ServiceClass::Risky},
    {"SMB", ServiceClass::Risky},
    {"MYSQL", ServiceClass::Risky},
    {"MSSQL", ServiceClass::Risky},
    {"RDP", ServiceClass::Risky},
    {"POSTGRES", ServiceClass::Risky},
    {"DNS", ServiceClass::Neutral},
    {"HTTP", ServiceClass::Neutral},
    {"NTP", ServiceClass::Neutral},
    {"SSH", ServiceClass::Reasonable},
    {"HTTPS", ServiceClass::Reasonable},
    {"SMTPS", ServiceClass::Reasonable},
    {"IMAPS", ServiceClass::Reasonable},
    {"POP3S", ServiceClass::Reasonable},
}};

}  // namespace

ServiceClass classify_service(const std::string& service) {
  for (const auto& [token, cls] : kServiceTable)
    if (service == token) return cls;
  return ServiceClass::Unclassified;
}

std::span<const std::pair<const char*, ServiceClass>> classified_services() {
  return kServiceTable;
}

OrgMonthCounts infection_days(std::span<const ingest::InfectionEvent> events,
                              const orgmap::IpIndex& index, std::size_t* unattributed) {
  // Distinct (ip, date); the org follows from the ip.
  std::set<std::pair<Ipv4, Date>> seen;
  OrgMonthCounts counts;
  std::size_t unmapped = 0;
  for (const auto& ev : events) {
    if (!seen.insert({ev.ip, ev.date}).second) continue;
    auto org = index.resolve(ev.ip);
    if (!org) {
      ++unmapped;
      continue;
    }
    ++counts[std::string(*org)][ev.date.year_month()];
  }
  if (unattributed) *unattributed = unmapped;
  return counts;
}

OrgMonthCounts shared_files(std::span<const ingest::SeederObservation> seeders,
                            const orgmap::IpIndex& index, std::size_t* unattributed) {
  std::map<std::pair<std::string, YearMonth>, std::set<std::string>> files;
  std::set<std::pair<std::string, YearMonth>> unmapped_files;
  for (const auto& s : seeders) {
    auto org = index.resolve(s.ip);
    if (!org) {
      unmapped_files.insert({s.infohash, s.month});
      continue;
    }
    files[{std::string(*org), s.month}].insert(s.infohash);
  }
  OrgMonthCounts counts;
  for (const auto& [key, hashes] : files) counts[key.first][key.second] = hashes.size();
  if (unattributed) *unattributed = unmapped_files.size();
  return counts;
}

namespace {

struct TlsServiceState {
  bool cfg_error = false;
  bool cert_error = false;
};

struct MonthVector {
  std::size_t tls_total = 0;
  std::size_t tls_cfg = 0;
  std::size_t tls_cert = 0;
  std::size_t svc_risky = 0;
  std::size_t svc_neutral = 0;
  std::size_t svc_reasonable = 0;
  std::size_t svc_classified() const { return svc_risky + svc_neutral + svc_reasonable; }
};

}  // namespace

std::vector<RiskProfile> aggregate_profiles(const AggregateInputs& inputs,
                                            const orgmap::Registry& registry,
                                            const orgmap::IpIndex& index,
                                            std::span<const YearMonth> months,
                                            AggregateDiagnostics* diag) {
  if (months.empty()) throw DataError("aggregation requires a non-empty month list");
  AggregateDiagnostics local;
  AggregateDiagnostics& d = diag ? *diag : local;

  std::set<YearMonth> window(months.begin(), months.end());
  auto in_window = [&](const YearMonth& ym) { return window.count(ym) != 0; };

  std::size_t unattributed_infections = 0;
  OrgMonthCounts bots = infection_days(inputs.infections, index, &unattributed_infections);
  std::size_t unattributed_seeders = 0;
  OrgMonthCounts files = shared_files(inputs.seeders, index, &unattributed_seeders);
  d.unattributed_infections = unattributed_infections;
  d.unattributed_seeders = unattributed_seeders;
  for (const auto& [org, by_month] : bots)
    for (const auto& [ym, n] : by_month)
      if (!in_window(ym)) d.out_of_window_infections += n;
  for (const auto& [org, by_month] : files)
    for (const auto& [ym, n] : by_month)
      if (!in_window(ym)) d.out_of_window_seeders += n;

  // A TLS service is a distinct (ip, port) pair per month; repeated
  // observations union their error sets.
  std::map<std::tuple<std::string, YearMonth, Ipv4, int>, TlsServiceState> tls_services;
  std::set<std::tuple<Ipv4, int, YearMonth>> tls_unattributed;
  for (const auto& obs : inputs.tls) {
    if (!in_window(obs.month)) {
      ++d.out_of_window_tls;
      continue;
    }
    auto org = index.resolve(obs.ip);
    if (!org) {
      tls_unattributed.insert({obs.ip, obs.port, obs.month});
      continue;
    }
    auto& state = tls_services[{std::string(*org), obs.month, obs.ip, obs.port}];
    state.cfg_error = state.cfg_error || !classify_tls_config(obs).empty();
    state.cert_error = state.cert_error || !classify_tls_cert(obs).empty();
  }
  d.unattributed_tls = tls_unattributed.size();

  // Service observations deduplicate by (ip, port, month); conflicting
  // tokens for one key resolve to the lexicographically smallest so results
  // do not depend on record order.
  std::map<std::tuple<std::string, YearMonth, Ipv4, int>, std::string> service_keys;
  std::set<std::tuple<Ipv4, int, YearMonth>> svc_unattributed;
  for (const auto& obs : inputs.services) {
    if (!in_window(obs.month)) {
      ++d.out_of_window_services;
      continue;
    }
    auto org = index.resolve(obs.ip);
    if (!org) {
      svc_unattributed.insert({obs.ip, obs.port, obs.month});
      continue;
    }
    auto key = std::make_tuple(std::string(*org), obs.month, obs.ip, obs.port);
    auto [it, inserted] = service_keys.emplace(key, obs.service);
    if (!inserted && obs.service < it->second) it->second = obs.service;
  }
  d.unattributed_services = svc_unattributed.size();

  std::map<std::pair<std::string, YearMonth>, MonthVector> month_vectors;
  for (const auto& [key, state] : tls_services) {
    auto& mv = month_vectors[{std::get<0>(key), std::get<1>(key)}];
    ++mv.tls_total;
    if (state.cfg_error) ++mv.tls_cfg;
    if (state.cert_error) ++mv.tls_cert;
  }
  for (const auto& [key, service] : service_keys) {
    auto& mv = month_vectors[{std::get<0>(key), std::get<1>(key)}];
    switch (classify_service(service)) {
      case ServiceClass::Risky: ++mv.svc_risky; break;
      case ServiceClass::Neutral: ++mv.svc_neutral; break;
      case ServiceClass::Reasonable: ++mv.svc_reasonable; break;
      case ServiceClass::Unclassified: break;
    }
  }

  std::vector<const orgmap::Organization*> orgs;
  orgs.reserve(registry.size());
  for (const auto& org : registry.organizations()) orgs.push_back(&org);
  std::sort(orgs.begin(), orgs.end(),
            [](const auto* a, const auto* b) { return a->org_id < b->org_id; });

  const double n_months = static_cast<double>(months.size());
  std::vector<RiskProfile> profiles;
  profiles.reserve(orgs.size());
  for (const auto* org : orgs) {
    RiskProfile p;
    p.org_id = org->org_id;
    p.industry = org->industry;
    p.employees = org->employees;

    double bot_sum = 0.0, p2p_sum = 0.0;
    auto bot_it = bots.find(org->org_id);
    auto file_it = files.find(org->org_id);
    double cfg_sum = 0.0, cert_sum = 0.0;
    std::size_t tls_months = 0;
    double risky_sum = 0.0, neutral_sum = 0.0, reasonable_sum = 0.0;
    std::size_t svc_months = 0;
    for (const YearMonth& ym : months) {
      if (bot_it != bots.end()) {
        auto it = bot_it->second.find(ym);
        if (it != bot_it->second.end())
          bot_sum += static_cast<double>(it->second) / static_cast<double>(org->employees);
      }
      if (file_it != files.end()) {
        auto it = file_it->second.find(ym);
        if (it != file_it->second.end())
          p2p_sum += static_cast<double>(it->second) / static_cast<double>(org->employees);
      }
      auto mv_it = month_vectors.find({org->org_id, ym});
      if (mv_it == month_vectors.end()) continue;
      const MonthVector& mv = mv_it->second;
      if (mv.tls_total > 0) {
        ++tls_months;
        cfg_sum += static_cast<double>(mv.tls_cfg) / static_cast<double>(mv.tls_total);
        cert_sum += static_cast<double>(mv.tls_cert) / static_cast<double>(mv.tls_total);
        p.n_tls_services += static_cast<std::int64_t>(mv.tls_total);
      }
      std::size_t classified = mv.svc_classified();
      if (classified > 0) {
        ++svc_months;
        risky_sum += static_cast<double>(mv.svc_risky) / static_cast<double>(classified);
        neutral_sum += static_cast<double>(mv.svc_neutral) / static_cast<double>(classified);
        reasonable_sum += static_cast<double>(mv.svc_reasonable) / static_cast<double>(classified);
        p.n_classified_services += static_cast<std::int64_t>(classified);
      }
    }
    p.bot_rate = bot_sum / n_months;
    p.p2p_rate = p2p_sum / n_months;
    p.bot_present = p.bot_rate > 0.0;
    p.p2p_present = p.p2p_rate > 0.0;
    if (tls_months > 0) {
      p.tls_cfg_frac = cfg_sum / static_cast<double>(tls_months);
      p.tls_cert_frac = cert_sum / static_cast<double>(tls_months);
    } else {
      d.orgs_without_tls.push_back(org->org_id);
    }
    if (svc_months > 0) {
      p.risky_frac = risky_sum / static_cast<double>(svc_months);
      p.neutral_frac = neutral_sum / static_cast<double>(svc_months);
      p.reasonable_frac = reasonable_sum / static_cast<double>(svc_months);
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

const char* const kProfilesHeader =
    "org_id,industry,employees,bot_rate,bot_present,p2p_rate,p2p_present,tls_cfg_frac,"
    "tls_cert_frac,risky_frac,neutral_frac,reasonable_frac,n_tls_services,"
    "n_classified_services";

void write_profiles(const std::vector<RiskProfile>& profiles, std::ostream& out) {
  out << kProfilesHeader << '\n';
  for (const auto& p : profiles) {
    out << csv::join_row({p.org_id, p.industry}) << ',' << p.employees << ','
        << format_double(p.bot_rate) << ',' << (p.bot_present ? '1' : '0') << ','
        << format_double(p.p2p_rate) << ',' << (p.p2p_present ? '1' : '0') << ','
        << format_double(p.tls_cfg_frac) << ',' << format_double(p.tls_cert_frac) << ','
        << format_double(p.risky_frac) << ',' << format_double(p.neutral_frac) << ','
        << format_double(p.reasonable_frac) << ',' << p.n_tls_services << ','
        << p.n_classified_services << '\n';
  }
}

std::vector<RiskProfile> read_profiles(std::istream& in) {
  csv::Reader reader(in);
  csv::require_header(reader, kProfilesHeader, "profiles file");
  std::vector<RiskProfile> profiles;
  std::vector<std::string> f;
  while (reader.next(f)) {
    std::string where = "profiles file line " + std::to_string(reader.line_number());
    if (f.size() != 14) throw DataError(where + ": expected 14 fields");
    RiskProfile p;
    p.org_id = f[0];
    p.industry = f[1];
    bool ok = try_parse_int64(f[2], p.employees) && p.employees >= 1;
    ok = ok && try_parse_double(f[3], p.bot_rate) && p.bot_rate >= 0.0;
    ok = ok && (f[4] == "0" || f[4] == "1");
    p.bot_present = f[4] == "1";
    ok = ok && try_parse_double(f[5], p.p2p_rate) && p.p2p_rate >= 0.0;
    ok = ok && (f[6] == "0" || f[6] == "1");
    p.p2p_present = f[6] == "1";
    ok = ok && try_parse_double(f[7], p.tls_cfg_frac);
    ok = ok && try_parse_double(f[8], p.tls_cert_frac);
    ok = ok && try_parse_double(f[9], p.risky_frac);
    ok = ok && try_parse_double(f[10], p.neutral_frac);
    ok = ok && try_parse_double(f[11], p.reasonable_frac);
    ok = ok && try_parse_int64(f[12], p.n_tls_services) && p.n_tls_services >= 0;
    ok = ok && try_parse_int64(f[13], p.n_classified_services) && p.n_classified_services >= 0;
    if (!ok) throw DataError(where + ": malformed profile row for '" + f[0] + "'");
    for (double frac : {p.tls_cfg_frac, p.tls_cert_frac, p.risky_frac, p.neutral_frac,
                        p.reasonable_frac})
      if (frac < 0.0 || frac > 1.0) throw DataError(where + ": fraction outside [0,1]");
    if (p.bot_present != (p.bot_rate > 0.0) || p.p2p_present != (p.p2p_rate > 0.0))
      throw DataError(where + ": presence flag inconsistent with rate");
    profiles.push_back(std::move(p));
  }
  return profiles;
}

std::vector<RiskProfile> read_profiles_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profiles file: " + path);
  return read_profiles(in);
}

}  // namespace riskpipe::riskvectors
