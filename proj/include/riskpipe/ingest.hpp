#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "riskpipe/common.hpp"
#include "riskpipe/ipv4.hpp"

namespace riskpipe::ingest {

enum class TlsVersion { SSLv2, SSLv3, TLSv1_0, TLSv1_1, TLSv1_2, TLSv1_3 };
enum class KeyAlgo { RSA, DSA, ECC };
enum class SigAlgo { SHA256_OR_BETTER, SHA1, MD5, MD2, OTHER };

const char* to_token(TlsVersion v);
const char* to_token(KeyAlgo a);
const char* to_token(SigAlgo a);
std::optional<TlsVersion> tls_version_from_token(const std::string& t);
std::optional<KeyAlgo> key_algo_from_token(const std::string& t);
std::optional<SigAlgo> sig_algo_from_token(const std::string& t);

struct TlsObservation {
  Ipv4 ip = 0;
  int port = 0;  // 1-65535
  YearMonth month;
  Date scan_date;  // within month
  TlsVersion tls_version = TlsVersion::TLSv1_2;
  bool heartbleed = false;
  bool freak = false;
  std::int64_t dh_bits = 0;  // 0 = no DH observed
  bool dh_common_prime = false;
  KeyAlgo key_algo = KeyAlgo::RSA;
  std::int64_t key_bits = 0;  // > 0
  SigAlgo sig_algo = SigAlgo::SHA256_OR_BETTER;
  Date not_before;
  Date not_after;  // >= not_before
  bool self_signed = false;
  bool nonstandard_root = false;
  bool chain_broken = false;

  bool operator==(const TlsObservation&) const = default;
};

struct ServiceObservation {
  Ipv4 ip = 0;
  int port = 0;
  YearMonth month;
  std::string service;  // uppercase token

  bool operator==(const ServiceObservation&) const = default;
};

struct SeederObservation {
  Ipv4 ip = 0;
  std::string infohash;  // non-empty
  YearMonth month;

  bool operator==(const SeederObservation&) const = default;
};

struct InfectionEvent {
  Ipv4 ip = 0;
  Date date;
  std::string family;

  bool operator==(const InfectionEvent&) const = default;
};

struct BreachEvent {
  std::string org_id;  // non-empty
  int year = 0;

  bool operator==(const BreachEvent&) const = default;
};

// Scan data is dirty: a malformed field skips that row with a line-numbered
// diagnostic, while a wrong header fails the whole file.
struct ParseDiagnostics {
  std::size_t total_rows = 0;
  std::size_t skipped = 0;
  std::vector<std::string> messages;
};

template <typename T>
struct ParseResult {
  std::vector<T> records;
  ParseDiagnostics diag;
};

extern const char* const kTlsHeader;
extern const char* const kServicesHeader;
extern const char* const kSeedersHeader;
extern const char* const kInfectionsHeader;
extern const char* const kBreachesHeader;

ParseResult<TlsObservation> parse_tls(std::istream& in);
ParseResult<ServiceObservation> parse_services(std::istream& in);
ParseResult<SeederObservation> parse_seeders(std::istream& in);
ParseResult<InfectionEvent> parse_infections(std::istream& in);
ParseResult<BreachEvent> parse_breaches(std::istream& in);

ParseResult<TlsObservation> parse_tls_file(const std::string& path);
ParseResult<ServiceObservation> parse_services_file(const std::string& path);
ParseResult<SeederObservation> parse_seeders_file(const std::string& path);
ParseResult<InfectionEvent> parse_infections_file(const std::string& path);
ParseResult<BreachEvent> parse_breaches_file(const std::string& path);

void write_tls(const std::vector<TlsObservation>& records, std::ostream& out);
void write_services(const std::vector<ServiceObservation>& records, std::ostream& out);
void write_seeders(const std::vector<SeederObservation>& records, std::ostream& out);
void write_infections(const std::vector<InfectionEvent>& records, std::ostream& out);
void write_breaches(const std::vector<BreachEvent>& records, std::ostream& out);

}  // namespace riskpipe::ingest
