#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "riskpipe/common.hpp"
#include "riskpipe/ingest.hpp"
#include "riskpipe/orgmap.hpp"

namespace riskpipe::riskvectors {

enum class ConfigError { ObsoleteVersion, Heartbleed, Freak, WeakDhBits, CommonDhPrime };

enum class CertError {
  SelfSigned,
  Expired,
  FutureIssued,
  NonstandardRoot,
  ChainBroken,
  WeakKey,
  WeakSignature
};

enum class ServiceClass { Risky, Neutral, Reasonable, Unclassified };

const char* to_token(ServiceClass c);

std::set<ConfigError> classify_tls_config(const ingest::TlsObservation& obs);
std::set<CertError> classify_tls_cert(const ingest::TlsObservation& obs);

// Exact lookup over the 21 classified service tokens; anything else is
// Unclassified.
ServiceClass classify_service(const std::string& service);
// The classified tokens, in (Risky, Neutral, Reasonable) order.
std::span<const std::pair<const char*, ServiceClass>> classified_services();

// One organization's yearly-averaged risk vectors and botnet outcome.
struct RiskProfile {
  std::string org_id;
  std::string industry;
  std::int64_t employees = 1;
  double bot_rate = 0.0;  // infection-days per employee per month, yearly mean
  bool bot_present = false;
  double p2p_rate = 0.0;  // distinct shared files per employee per month, yearly mean
  bool p2p_present = false;
  double tls_cfg_frac = 0.0;
  double tls_cert_frac = 0.0;
  double risky_frac = 0.0;
  double neutral_frac = 0.0;
  double reasonable_frac = 0.0;
  std::int64_t n_tls_services = 0;
  std::int64_t n_classified_services = 0;

  bool operator==(const RiskProfile&) const = default;
};

// Counts keyed by org_id then month; only nonzero entries are stored.
using OrgMonthCounts = std::map<std::string, std::map<YearMonth, std::size_t>>;

// Distinct (ip, date) pairs per org per month; family is ignored for
// uniqueness. Pairs that resolve to no organization increment *unattributed.
OrgMonthCounts infection_days(std::span<const ingest::InfectionEvent> events,
                              const orgmap::IpIndex& index,
                              std::size_t* unattributed = nullptr);

// Distinct infohash values per org per month (files, not IPs). Unattributed
// counts distinct (infohash, month) pairs seen only from unmapped space.
OrgMonthCounts shared_files(std::span<const ingest::SeederObservation> seeders,
                            const orgmap::IpIndex& index,
                            std::size_t* unattributed = nullptr);

struct AggregateInputs {
  std::span<const ingest::TlsObservation> tls;
  std::span<const ingest::ServiceObservation> services;
  std::span<const ingest::SeederObservation> seeders;
  std::span<const ingest::InfectionEvent> infections;
};

struct AggregateDiagnostics {
  std::size_t unattributed_infections = 0;
  std::size_t unattributed_seeders = 0;
  std::size_t unattributed_tls = 0;
  std::size_t unattributed_services = 0;
  std::size_t out_of_window_infections = 0;
  std::size_t out_of_window_seeders = 0;
  std::size_t out_of_window_tls = 0;
  std::size_t out_of_window_services = 0;
  std::vector<std::string> orgs_without_tls;
};

// Monthly counts and fractions averaged over `months` per the aggregation
// rules; one profile per registry organization, sorted by org_id.
std::vector<RiskProfile> aggregate_profiles(const AggregateInputs& inputs,
                                            const orgmap::Registry& registry,
                                            const orgmap::IpIndex& index,
                                            std::span<const YearMonth> months,
                                            AggregateDiagnostics* diag = nullptr);

extern const char* const kProfilesHeader;

void write_profiles(const std::vector<RiskProfile>& profiles, std::ostream& out);
std::vector<RiskProfile> read_profiles(std::istream& in);
std::vector<RiskProfile> read_profiles_file(const std::string& path);

}  // namespace riskpipe::riskvectors
