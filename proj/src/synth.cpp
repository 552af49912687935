#include "riskpipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "riskpipe/csv.hpp"
#include "riskpipe/parallel.hpp"
#include "riskpipe/rng.hpp"

namespace riskpipe::synth {

namespace {

constexpr std::uint32_t kBlockBase = 0x01000000u;  // 1.0.0.0, one /16 per org
constexpr std::uint32_t kInfectionOffset = 100;
constexpr std::uint32_t kInfectionSpan = 59000;
constexpr std::uint32_t kTlsOffset = 60000;
constexpr std::uint32_t kServiceOffset = 63000;
constexpr std::uint32_t kSeederOffset = 65200;

const char* const kFamilies[] = {"zeus", "conficker", "ramnit", "gameover"};

struct ServicePort {
  const char* token;
  int port;
};

const ServicePort kRiskyServices[] = {
    {"TELNET", 23}, {"FTP", 21},     {"SMTP", 25},     {"POP3", 110}, {"SUNRPC", 111},
    {"NETBIOS", 139}, {"IMAP", 143}, {"SNMP", 161},    {"SMB", 445},  {"MYSQL", 3306},
    {"MSSQL", 1433}, {"RDP", 3389},  {"POSTGRES", 5432}};
const ServicePort kNeutralServices[] = {{"HTTP", 80}, {"DNS", 53}, {"NTP", 123}};
const ServicePort kReasonableServices[] = {
    {"SSH", 22}, {"HTTPS", 443}, {"SMTPS", 465}, {"IMAPS", 993}, {"POP3S", 995}};

void validate_mixture(const FractionMixture& m, const char* what) {
  if (m.mass_at_zero < 0.0 || m.mass_at_one < 0.0 || m.mass_at_zero + m.mass_at_one > 1.0)
    throw DataError(std::string("synth config: ") + what + " point masses must be in [0,1]");
  if (!(m.beta_a > 0.0) || !(m.beta_b > 0.0))
    throw DataError(std::string("synth config: ") + what + " beta shapes must be positive");
}

double draw_mixture(Rng& rng, const FractionMixture& m) {
  double u = rng.uniform01();
  if (u < m.mass_at_zero) return 0.0;
  if (u < m.mass_at_zero + m.mass_at_one) return 1.0;
  return rng.beta(m.beta_a, m.beta_b);
}

std::string org_label(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "org%05zu", i + 1);
  return buf;
}

std::string industry_label(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "industry%03zu", i + 1);
  return buf;
}

struct OrgDraw {
  std::size_t industry_idx = 0;
  std::int64_t employees = 1;
  double tls_cfg = 0.0;
  double tls_cert = 0.0;
  double risky = 0.0;
  double neutral = 0.0;
  double reasonable = 0.0;
  double p2p_rate = 0.0;
  bool zero_bot = true;
  double noise = 0.0;
  std::int64_t n_tls = 1;
  std::int64_t n_svc = 1;
  // Events mode quantization.
  std::int64_t cfg_errors = 0;
  std::int64_t cert_errors = 0;
  std::int64_t svc_counts[3] = {0, 0, 0};  // risky, neutral, reasonable
  long long p2p_files_year = 0;
  long long infection_days_year = 0;
  double bot_rate = 0.0;
};

// Proportional integer split of n across the three classes (largest
// remainder; ties resolve in class order).
void largest_remainder(double fr, double fn, double fre, std::int64_t n,
                       std::int64_t (&counts)[3]) {
  double targets[3] = {fr * static_cast<double>(n), fn * static_cast<double>(n),
                       fre * static_cast<double>(n)};
  std::int64_t total = 0;
  double parts[3];
  for (int i = 0; i < 3; ++i) {
    counts[i] = static_cast<std::int64_t>(std::floor(targets[i]));
    parts[i] = targets[i] - static_cast<double>(counts[i]);
    total += counts[i];
  }
  std::int64_t leftover = n - total;
  while (leftover > 0) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (parts[i] > parts[best]) best = i;
    ++counts[best];
    parts[best] = -1.0;
    --leftover;
  }
}

Coefficients perturb(const Coefficients& base, double spread, Rng& rng) {
  Coefficients c = base;
  c.beta0 = base.beta0 + spread * rng.normal();
  c.beta1 = base.beta1 + spread * rng.normal();
  c.beta2 = base.beta2 + spread * rng.normal();
  c.beta3 = base.beta3 + spread * rng.normal();
  c.beta4 = base.beta4 + spread * rng.normal();
  c.beta5 = base.beta5 + spread * rng.normal();
  c.beta6 = base.beta6 + spread * rng.normal();
  return c;
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.n_orgs < 20) throw DataError("synth config: n_orgs must be at least 20");
  if (c.n_orgs > 50000) throw DataError("synth config: n_orgs too large for the /16-per-org plan");
  if (c.n_industries < 1) throw DataError("synth config: n_industries must be positive");
  if (!(c.sigma >= 0.0)) throw DataError("synth config: sigma must be nonnegative");
  if (!(c.zero_bot_share >= 0.0 && c.zero_bot_share < 1.0))
    throw DataError("synth config: zero_bot_share must be in [0,1); 1 leaves no regression rows");
  for (double share : {c.zero_p2p_given_bots, c.zero_p2p_given_no_bots})
    if (!(share >= 0.0 && share <= 1.0))
      throw DataError("synth config: zero-p2p shares must be in [0,1]");
  if (!(c.employee_sdlog >= 0.0) || !std::isfinite(c.employee_meanlog))
    throw DataError("synth config: bad employee distribution");
  if (c.employee_cap < 1) throw DataError("synth config: employee_cap must be positive");
  if (!(c.p2p_sdlog >= 0.0) || !std::isfinite(c.p2p_meanlog))
    throw DataError("synth config: bad p2p distribution");
  validate_mixture(c.tls_cfg_mixture, "tls_cfg_mixture");
  validate_mixture(c.tls_cert_mixture, "tls_cert_mixture");
  validate_mixture(c.risky_mixture, "risky_mixture");
  validate_mixture(c.reasonable_mixture, "reasonable_mixture");
}

Dataset generate_dataset(const SynthConfig& config, Mode mode) {
  validate(config);
  Dataset data;
  data.truth.pooled = config.true_coefficients;
  data.truth.sigma = config.sigma;

  std::vector<Coefficients> industry_coeffs(config.n_industries, config.true_coefficients);
  if (config.industry_coefficient_spread > 0.0) {
    for (std::size_t i = 0; i < config.n_industries; ++i) {
      Rng rng(substream_seed(config.seed ^ 0x9d2c5680aull, i));
      industry_coeffs[i] =
          perturb(config.true_coefficients, config.industry_coefficient_spread, rng);
      data.truth.per_industry.emplace_back(industry_label(i), industry_coeffs[i]);
    }
  }

  const bool events = mode == Mode::Events;
  std::vector<OrgDraw> draws(config.n_orgs);
  parallel_for(config.n_orgs, [&](std::size_t i) {
    Rng rng(substream_seed(config.seed, i));
    OrgDraw& d = draws[i];
    d.industry_idx = static_cast<std::size_t>(rng.uniform_index(config.n_industries));
    double raw_emp = rng.lognormal(config.employee_meanlog, config.employee_sdlog);
    d.employees = std::clamp<std::int64_t>(std::llround(raw_emp), 1, config.employee_cap);
    d.tls_cfg = draw_mixture(rng, config.tls_cfg_mixture);
    d.tls_cert = draw_mixture(rng, config.tls_cert_mixture);
    d.risky = draw_mixture(rng, config.risky_mixture);
    double remainder = 1.0 - d.risky;
    if (remainder > 0.0) {
      double u = rng.uniform01();
      if (u < config.reasonable_mixture.mass_at_one)
        d.reasonable = remainder;
      else if (u < config.reasonable_mixture.mass_at_one + config.reasonable_mixture.mass_at_zero)
        d.reasonable = 0.0;
      else
        d.reasonable = remainder * rng.beta(config.reasonable_mixture.beta_a,
                                            config.reasonable_mixture.beta_b);
    }
    d.neutral = 1.0 - d.risky - d.reasonable;
    if (d.neutral < 0.0) d.neutral = 0.0;

    d.zero_bot = rng.bernoulli(config.zero_bot_share);
    double zero_p2p_share =
        d.zero_bot ? config.zero_p2p_given_no_bots : config.zero_p2p_given_bots;
    bool zero_p2p = rng.bernoulli(zero_p2p_share);
    d.p2p_rate = zero_p2p ? 0.0 : rng.lognormal(config.p2p_meanlog, config.p2p_sdlog);
    d.noise = rng.normal(0.0, config.sigma);

    d.n_tls = 1 + d.employees / 50;
    d.n_svc = 1 + d.employees / 30;

    if (events) {
      // Quantize the regressors to what integer event counts can express,
      // then generate the response from the quantized values.
      d.cfg_errors = std::llround(d.tls_cfg * static_cast<double>(d.n_tls));
      d.cert_errors = std::llround(d.tls_cert * static_cast<double>(d.n_tls));
      d.tls_cfg = static_cast<double>(d.cfg_errors) / static_cast<double>(d.n_tls);
      d.tls_cert = static_cast<double>(d.cert_errors) / static_cast<double>(d.n_tls);
      largest_remainder(d.risky, d.neutral, d.reasonable, d.n_svc, d.svc_counts);
      d.risky = static_cast<double>(d.svc_counts[0]) / static_cast<double>(d.n_svc);
      d.neutral = static_cast<double>(d.svc_counts[1]) / static_cast<double>(d.n_svc);
      d.reasonable = static_cast<double>(d.svc_counts[2]) / static_cast<double>(d.n_svc);
      d.p2p_files_year = std::llround(d.p2p_rate * static_cast<double>(d.employees) * 12.0);
      d.p2p_rate =
          static_cast<double>(d.p2p_files_year) / (12.0 * static_cast<double>(d.employees));
    }

    if (!d.zero_bot) {
      const Coefficients& beta = industry_coeffs[d.industry_idx];
      double t0 = d.p2p_rate == 0.0 ? 1.0 : 0.0;
      double t_hat = d.p2p_rate > 0.0 ? std::log(d.p2p_rate) : 0.0;
      double log_b = beta.beta1 * t0 + beta.beta2 * t_hat + beta.beta3 * d.tls_cfg +
                     beta.beta4 * d.tls_cert + beta.beta5 * d.risky +
                     beta.beta6 * d.reasonable + beta.beta0 + d.noise;
      d.bot_rate = std::exp(log_b);
      if (events)
        d.infection_days_year =
            std::llround(d.bot_rate * static_cast<double>(d.employees) * 12.0);
    }
  });

  data.profiles.reserve(config.n_orgs);
  for (std::size_t i = 0; i < config.n_orgs; ++i) {
    const OrgDraw& d = draws[i];
    riskvectors::RiskProfile p;
    p.org_id = org_label(i);
    p.industry = industry_label(d.industry_idx);
    p.employees = d.employees;
    p.bot_rate = d.bot_rate;
    p.bot_present = p.bot_rate > 0.0;
    p.p2p_rate = d.p2p_rate;
    p.p2p_present = p.p2p_rate > 0.0;
    p.tls_cfg_frac = d.tls_cfg;
    p.tls_cert_frac = d.tls_cert;
    p.risky_frac = d.risky;
    p.neutral_frac = d.neutral;
    p.reasonable_frac = d.reasonable;
    p.n_tls_services = events ? d.n_tls * 12 : d.n_tls;
    p.n_classified_services = events ? d.n_svc * 12 : d.n_svc;
    data.profiles.push_back(std::move(p));
  }

  if (!events) return data;

  for (int m = 1; m <= 12; ++m) data.months.push_back({2015, m});
  data.orgs.reserve(config.n_orgs);
  data.ranges.reserve(config.n_orgs);
  for (std::size_t i = 0; i < config.n_orgs; ++i) {
    const OrgDraw& d = draws[i];
    std::uint32_t block = kBlockBase + static_cast<std::uint32_t>(i) * 0x10000u;
    std::string id = org_label(i);
    data.orgs.push_back(
        orgmap::Organization{id, "Org " + std::to_string(i + 1), industry_label(d.industry_idx),
                             d.employees});
    data.ranges.push_back(orgmap::IpRange{Cidr{block, 16}, id});

    auto spread_over_months = [](long long total, int month_index) {
      long long base = total / 12;
      return base + (month_index < static_cast<int>(total % 12) ? 1 : 0);
    };

    for (int mi = 0; mi < 12; ++mi) {
      YearMonth ym = data.months[static_cast<std::size_t>(mi)];
      int dim = days_in_month(ym.year, ym.month);

      long long infections = spread_over_months(d.infection_days_year, mi);
      if (infections > static_cast<long long>(kInfectionSpan) * dim)
        throw DataError("synth: org " + id + " needs more infection IPs than its /16 holds");
      for (long long k = 0; k < infections; ++k) {
        Ipv4 ip = block + kInfectionOffset + static_cast<std::uint32_t>(k / dim);
        Date date{ym.year, ym.month, 1 + static_cast<int>(k % dim)};
        data.infections.push_back(
            ingest::InfectionEvent{ip, date, kFamilies[static_cast<std::size_t>(k) % 4]});
      }

      long long files = spread_over_months(d.p2p_files_year, mi);
      for (long long k = 0; k < files; ++k) {
        char hash[48];
        std::snprintf(hash, sizeof hash, "f%zu_%02d_%lld", i + 1, ym.month,
                      static_cast<long long>(k));
        data.seeders.push_back(ingest::SeederObservation{block + kSeederOffset, hash, ym});
      }

      for (std::int64_t j = 0; j < d.n_tls; ++j) {
        ingest::TlsObservation obs;
        obs.ip = block + kTlsOffset + static_cast<std::uint32_t>(j);
        obs.port = 443;
        obs.month = ym;
        obs.scan_date = Date{ym.year, ym.month, 15};
        obs.tls_version =
            j < d.cfg_errors ? ingest::TlsVersion::SSLv3 : ingest::TlsVersion::TLSv1_2;
        obs.dh_bits = 2048;
        obs.key_algo = ingest::KeyAlgo::RSA;
        obs.key_bits = 2048;
        obs.sig_algo = ingest::SigAlgo::SHA256_OR_BETTER;
        obs.not_before = Date{2014, 1, 1};
        obs.not_after = Date{2017, 12, 31};
        obs.self_signed = j < d.cert_errors;
        data.tls.push_back(obs);
      }

      std::int64_t svc_index = 0;
      const std::pair<const ServicePort*, std::size_t> classes[3] = {
          {kRiskyServices, std::size(kRiskyServices)},
          {kNeutralServices, std::size(kNeutralServices)},
          {kReasonableServices, std::size(kReasonableServices)},
      };
      for (int cls = 0; cls < 3; ++cls) {
        for (std::int64_t k = 0; k < d.svc_counts[cls]; ++k) {
          const ServicePort& sp =
              classes[cls].first[static_cast<std::size_t>(k) % classes[cls].second];
          data.services.push_back(ingest::ServiceObservation{
              block + kServiceOffset + static_cast<std::uint32_t>(svc_index), sp.port, ym,
              sp.token});
          ++svc_index;
        }
      }
    }
  }
  return data;
}

namespace {

void write_coeff_rows(std::ostream& out, const std::string& industry, const Coefficients& c) {
  const std::pair<const char*, double> rows[] = {
      {"beta0", c.beta0}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"beta3", c.beta3},
      {"beta4", c.beta4}, {"beta5", c.beta5}, {"beta6", c.beta6}};
  for (const auto& [name, value] : rows)
    out << name << ',' << industry << ',' << format_double(value) << '\n';
}

}  // namespace

void write_ground_truth(const GroundTruth& truth, std::ostream& out) {
  out << "coefficient,industry,value\n";
  write_coeff_rows(out, "", truth.pooled);
  out << "sigma,," << format_double(truth.sigma) << '\n';
  for (const auto& [industry, coeffs] : truth.per_industry)
    write_coeff_rows(out, industry, coeffs);
}

GroundTruth read_ground_truth(std::istream& in) {
  csv::Reader reader(in);
  csv::require_header(reader, "coefficient,industry,value", "ground truth file");
  GroundTruth truth;
  std::vector<std::string> f;
  auto assign = [](Coefficients& c, const std::string& name, double v) {
    if (name == "beta0") c.beta0 = v;
    else if (name == "beta1") c.beta1 = v;
    else if (name == "beta2") c.beta2 = v;
    else if (name == "beta3") c.beta3 = v;
    else if (name == "beta4") c.beta4 = v;
    else if (name == "beta5") c.beta5 = v;
    else if (name == "beta6") c.beta6 = v;
    else return false;
    return true;
  };
  while (reader.next(f)) {
    std::string where = "ground truth line " + std::to_string(reader.line_number());
    if (f.size() != 3) throw DataError(where + ": expected 3 fields");
    double v;
    if (!try_parse_double(f[2], v)) throw DataError(where + ": bad value");
    if (f[1].empty()) {
      if (f[0] == "sigma") {
        truth.sigma = v;
      } else if (!assign(truth.pooled, f[0], v)) {
        throw DataError(where + ": unknown coefficient '" + f[0] + "'");
      }
    } else {
      if (truth.per_industry.empty() || truth.per_industry.back().first != f[1])
        truth.per_industry.emplace_back(f[1], truth.pooled);
      if (!assign(truth.per_industry.back().second, f[0], v))
        throw DataError(where + ": unknown coefficient '" + f[0] + "'");
    }
  }
  return truth;
}

GroundTruth read_ground_truth_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground truth file: " + path);
  return read_ground_truth(in);
}

}  // namespace riskpipe::synth
