#include "riskpipe/ingest.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "riskpipe/csv.hpp"

namespace riskpipe::ingest {

const char* const kTlsHeader =
    "ip,port,month,scan_date,tls_version,heartbleed,freak,dh_bits,dh_common_prime,"
    "key_algo,key_bits,sig_algo,not_before,not_after,self_signed,nonstandard_root,"
    "chain_broken";
const char* const kServicesHeader = "ip,port,month,service";
const char* const kSeedersHeader = "ip,infohash,month";
const char* const kInfectionsHeader = "ip,date,family";
const char* const kBreachesHeader = "org_id,year";

const char* to_token(TlsVersion v) {
  switch (v) {
    case TlsVersion::SSLv2: return "SSLv2";
    case TlsVersion::SSLv3: return "SSLv3";
    case TlsVersion::TLSv1_0: return "TLSv1_0";
    case TlsVersion::TLSv1_1: return "TLSv1_1";
    case TlsVersion::TLSv1_2: return "TLSv1_2";
    case TlsVersion::TLSv1_3: return "TLSv1_3";
  }
  return "?";
}

const char* to_token(KeyAlgo a) {
  switch (a) {
    case KeyAlgo::RSA: return "RSA";
    case KeyAlgo::DSA: return "DSA";
    case KeyAlgo::ECC: return "ECC";
  }
  return "?";
}

const char* to_token(SigAlgo a) {
  switch (a) {
    case SigAlgo::SHA256_OR_BETTER: return "SHA256_OR_BETTER";
    case SigAlgo::SHA1: return "SHA1";
    case SigAlgo::MD5: return "MD5";
    case SigAlgo::MD2: return "MD2";
    case SigAlgo::OTHER: return "OTHER";
  }
  return "?";
}

std::optional<TlsVersion> tls_version_from_token(const std::string& t) {
  if (t == "SSLv2") return TlsVersion::SSLv2;
  if (t == "SSLv3") return TlsVersion::SSLv3;
  if (t == "TLSv1_0") return TlsVersion::TLSv1_0;
  if (t == "TLSv1_1") return TlsVersion::TLSv1_1;
  if (t == "TLSv1_2") return TlsVersion::TLSv1_2;
  if (t == "TLSv1_3") return TlsVersion::TLSv1_3;
  return std::nullopt;
}

std::optional<KeyAlgo> key_algo_from_token(const std::string& t) {
  if (t == "RSA") return KeyAlgo::RSA;
  if (t == "DSA") return KeyAlgo::DSA;
  if (t == "ECC") return KeyAlgo::ECC;
  return std::nullopt;
}

std::optional<SigAlgo> sig_algo_from_token(const std::string& t) {
  if (t == "SHA256_OR_BETTER") return SigAlgo::SHA256_OR_BETTER;
  if (t == "SHA1") return SigAlgo::SHA1;
  if (t == "MD5") return SigAlgo::MD5;
  if (t == "MD2") return SigAlgo::MD2;
  if (t == "OTHER") return SigAlgo::OTHER;
  return std::nullopt;
}

namespace {

struct RowError {
  std::string reason;
};

bool parse_bool(const std::string& t, bool& out) {
  if (t == "0") { out = false; return true; }
  if (t == "1") { out = true; return true; }
  return false;
}

bool parse_port(const std::string& t, int& out) {
  std::int64_t v;
  if (!try_parse_int64(t, v) || v < 1 || v > 65535) return false;
  out = static_cast<int>(v);
  return true;
}

// Shared per-file scan loop: `parse_row` either fills the record or reports
// why the row was dropped.
template <typename T, typename RowFn>
ParseResult<T> parse_stream(std::istream& in, const char* header, const char* what, RowFn parse_row) {
  csv::Reader reader(in);
  csv::require_header(reader, header, what);
  ParseResult<T> result;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++result.diag.total_rows;
    T rec;
    std::string reason;
    if (parse_row(f, rec, reason)) {
      result.records.push_back(std::move(rec));
    } else {
      ++result.diag.skipped;
      result.diag.messages.push_back(std::string(what) + " line " +
                                     std::to_string(reader.line_number()) + ": " + reason);
    }
  }
  return result;
}

}  // namespace

ParseResult<TlsObservation> parse_tls(std::istream& in) {
  return parse_stream<TlsObservation>(
      in, kTlsHeader, "tls file",
      [](const std::vector<std::string>& f, TlsObservation& r, std::string& reason) {
        if (f.size() != 17) { reason = "expected 17 fields"; return false; }
        if (!try_parse_ipv4(f[0], r.ip)) { reason = "bad ip '" + f[0] + "'"; return false; }
        if (!parse_port(f[1], r.port)) { reason = "bad port '" + f[1] + "'"; return false; }
        if (!try_parse_year_month(f[2], r.month)) { reason = "bad month '" + f[2] + "'"; return false; }
        if (!try_parse_date(f[3], r.scan_date)) { reason = "bad scan_date '" + f[3] + "'"; return false; }
        if (r.scan_date.year_month() != r.month) { reason = "scan_date outside month"; return false; }
        auto ver = tls_version_from_token(f[4]);
        if (!ver) { reason = "bad tls_version '" + f[4] + "'"; return false; }
        r.tls_version = *ver;
        if (!parse_bool(f[5], r.heartbleed)) { reason = "bad heartbleed flag"; return false; }
        if (!parse_bool(f[6], r.freak)) { reason = "bad freak flag"; return false; }
        if (!try_parse_int64(f[7], r.dh_bits) || r.dh_bits < 0) { reason = "bad dh_bits"; return false; }
        if (!parse_bool(f[8], r.dh_common_prime)) { reason = "bad dh_common_prime flag"; return false; }
        auto key = key_algo_from_token(f[9]);
        if (!key) { reason = "bad key_algo '" + f[9] + "'"; return false; }
        r.key_algo = *key;
        if (!try_parse_int64(f[10], r.key_bits) || r.key_bits < 1) { reason = "bad key_bits"; return false; }
        auto sig = sig_algo_from_token(f[11]);
        if (!sig) { reason = "bad sig_algo '" + f[11] + "'"; return false; }
        r.sig_algo = *sig;
        if (!try_parse_date(f[12], r.not_before)) { reason = "bad not_before"; return false; }
        if (!try_parse_date(f[13], r.not_after)) { reason = "bad not_after"; return false; }
        if (r.not_after < r.not_before) { reason = "not_before > not_after"; return false; }
        if (!parse_bool(f[14], r.self_signed)) { reason = "bad self_signed flag"; return false; }
        if (!parse_bool(f[15], r.nonstandard_root)) { reason = "bad nonstandard_root flag"; return false; }
        if (!parse_bool(f[16], r.chain_broken)) { reason = "bad chain_broken flag"; return false; }
        return true;
      });
}

ParseResult<ServiceObservation> parse_services(std::istream& in) {
  return parse_stream<ServiceObservation>(
      in, kServicesHeader, "services file",
      [](const std::vector<std::string>& f, ServiceObservation& r, std::string& reason) {
        if (f.size() != 4) { reason = "expected 4 fields"; return false; }
        if (!try_parse_ipv4(f[0], r.ip)) { reason = "bad ip '" + f[0] + "'"; return false; }
        if (!parse_port(f[1], r.port)) { reason = "bad port '" + f[1] + "'"; return false; }
        if (!try_parse_year_month(f[2], r.month)) { reason = "bad month '" + f[2] + "'"; return false; }
        if (f[3].empty()) { reason = "empty service token"; return false; }
        r.service = f[3];
        for (char& c : r.service)
          if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        return true;
      });
}

ParseResult<SeederObservation> parse_seeders(std::istream& in) {
  return parse_stream<SeederObservation>(
      in, kSeedersHeader, "seeders file",
      [](const std::vector<std::string>& f, SeederObservation& r, std::string& reason) {
        if (f.size() != 3) { reason = "expected 3 fields"; return false; }
        if (!try_parse_ipv4(f[0], r.ip)) { reason = "bad ip '" + f[0] + "'"; return false; }
        if (f[1].empty()) { reason = "empty infohash"; return false; }
        r.infohash = f[1];
        if (!try_parse_year_month(f[2], r.month)) { reason = "bad month '" + f[2] + "'"; return false; }
        return true;
      });
}

ParseResult<InfectionEvent> parse_infections(std::istream& in) {
  return parse_stream<InfectionEvent>(
      in, kInfectionsHeader, "infections file",
      [](const std::vector<std::string>& f, InfectionEvent& r, std::string& reason) {
        if (f.size() != 3) { reason = "expected 3 fields"; return false; }
        if (!try_parse_ipv4(f[0], r.ip)) { reason = "bad ip '" + f[0] + "'"; return false; }
        if (!try_parse_date(f[1], r.date)) { reason = "bad date '" + f[1] + "'"; return false; }
        r.family = f[2];
        return true;
      });
}

ParseResult<BreachEvent> parse_breaches(std::istream& in) {
  return parse_stream<BreachEvent>(
      in, kBreachesHeader, "breaches file",
      [](const std::vector<std::string>& f, BreachEvent& r, std::string& reason) {
        if (f.size() != 2) { reason = "expected 2 fields"; return false; }
        if (f[0].empty()) { reason = "empty org_id"; return false; }
        r.org_id = f[0];
        std::int64_t year;
        if (!try_parse_int64(f[1], year) || year < 1970 || year > 9999) {
          reason = "bad year '" + f[1] + "'";
          return false;
        }
        r.year = static_cast<int>(year);
        return true;
      });
}

namespace {

template <typename Fn>
auto parse_file(const std::string& path, const char* what, Fn fn) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + ": " + path);
  return fn(in);
}

}  // namespace

ParseResult<TlsObservation> parse_tls_file(const std::string& path) {
  return parse_file(path, "tls file", [](std::istream& in) { return parse_tls(in); });
}
ParseResult<ServiceObservation> parse_services_file(const std::string& path) {
  return parse_file(path, "services file", [](std::istream& in) { return parse_services(in); });
}
ParseResult<SeederObservation> parse_seeders_file(const std::string& path) {
  return parse_file(path, "seeders file", [](std::istream& in) { return parse_seeders(in); });
}
ParseResult<InfectionEvent> parse_infections_file(const std::string& path) {
  return parse_file(path, "infections file", [](std::istream& in) { return parse_infections(in); });
}
ParseResult<BreachEvent> parse_breaches_file(const std::string& path) {
  return parse_file(path, "breaches file", [](std::istream& in) { return parse_breaches(in); });
}

void write_tls(const std::vector<TlsObservation>& records, std::ostream& out) {
  out << kTlsHeader << '\n';
  for (const auto& r : records) {
    out << format_ipv4(r.ip) << ',' << r.port << ',' << to_string(r.month) << ','
        << to_string(r.scan_date) << ',' << to_token(r.tls_version) << ','
        << (r.heartbleed ? '1' : '0') << ',' << (r.freak ? '1' : '0') << ',' << r.dh_bits
        << ',' << (r.dh_common_prime ? '1' : '0') << ',' << to_token(r.key_algo) << ','
        << r.key_bits << ',' << to_token(r.sig_algo) << ',' << to_string(r.not_before) << ','
        << to_string(r.not_after) << ',' << (r.self_signed ? '1' : '0') << ','
        << (r.nonstandard_root ? '1' : '0') << ',' << (r.chain_broken ? '1' : '0') << '\n';
  }
}

void write_services(const std::vector<ServiceObservation>& records, std::ostream& out) {
  out << kServicesHeader << '\n';
  for (const auto& r : records)
    out << format_ipv4(r.ip) << ',' << r.port << ',' << to_string(r.month) << ','
        << csv::join_row({r.service}) << '\n';
}

void write_seeders(const std::vector<SeederObservation>& records, std::ostream& out) {
  out << kSeedersHeader << '\n';
  for (const auto& r : records)
    out << format_ipv4(r.ip) << ',' << csv::join_row({r.infohash}) << ','
        << to_string(r.month) << '\n';
}

void write_infections(const std::vector<InfectionEvent>& records, std::ostream& out) {
  out << kInfectionsHeader << '\n';
  for (const auto& r : records)
    out << format_ipv4(r.ip) << ',' << to_string(r.date) << ',' << csv::join_row({r.family})
        << '\n';
}

void write_breaches(const std::vector<BreachEvent>& records, std::ostream& out) {
  out << kBreachesHeader << '\n';
  for (const auto& r : records) out << csv::join_row({r.org_id}) << ',' << r.year << '\n';
}

}  // namespace riskpipe::ingest
