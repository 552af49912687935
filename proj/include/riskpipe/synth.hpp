#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "riskpipe/common.hpp"
#include "riskpipe/ingest.hpp"
#include "riskpipe/orgmap.hpp"
#include "riskpipe/riskvectors.hpp"

namespace riskpipe::synth {

// Regression coefficients in model order; beta0 is the intercept.
struct Coefficients {
  double beta0 = -0.167;  // intercept
  double beta1 = -5.763;  // t0 (no peer-to-peer activity)
  double beta2 = 0.841;   // t_hat (log peer-to-peer rate)
  double beta3 = 0.512;   // tls_cfg_frac
  double beta4 = 0.638;   // tls_cert_frac
  double beta5 = 0.509;   // risky_frac
  double beta6 = -0.493;  // reasonable_frac
};

// Point masses at 0 and 1 with a Beta-distributed middle; the shapes are
// eyeballed approximations of the multimodal fraction distributions seen in
// real scan data, not fitted values.
struct FractionMixture {
  double mass_at_zero = 0.0;
  double mass_at_one = 0.0;
  double beta_a = 1.5;
  double beta_b = 1.5;
};

struct SynthConfig {
  std::size_t n_orgs = 1000;  // >= 20
  std::size_t n_industries = 22;
  std::uint64_t seed = 1;
  Coefficients true_coefficients;
  double sigma = 1.0;
  double zero_bot_share = 0.67;
  double zero_p2p_given_bots = 0.135;
  double zero_p2p_given_no_bots = 0.65;
  double employee_meanlog = 5.0;
  double employee_sdlog = 1.5;
  std::int64_t employee_cap = 20000;
  double p2p_meanlog = -4.0;
  double p2p_sdlog = 1.8;
  FractionMixture tls_cfg_mixture{0.40, 0.25, 1.2, 1.2};
  FractionMixture tls_cert_mixture{0.35, 0.30, 1.2, 1.2};
  FractionMixture risky_mixture{0.20, 0.15, 2.0, 3.0};
  FractionMixture reasonable_mixture{0.15, 0.25, 2.0, 2.0};
  // Per-beta perturbation scale across industries; 0 = homogeneous.
  double industry_coefficient_spread = 0.0;
};

void validate(const SynthConfig& config);

enum class Mode { Profiles, Events };

struct GroundTruth {
  Coefficients pooled;
  double sigma = 1.0;
  // Only populated when industry_coefficient_spread > 0.
  std::vector<std::pair<std::string, Coefficients>> per_industry;
};

struct Dataset {
  std::vector<riskvectors::RiskProfile> profiles;  // generated ground truth
  GroundTruth truth;
  // Events mode only:
  std::vector<orgmap::Organization> orgs;
  std::vector<orgmap::IpRange> ranges;
  std::vector<ingest::TlsObservation> tls;
  std::vector<ingest::ServiceObservation> services;
  std::vector<ingest::SeederObservation> seeders;
  std::vector<ingest::InfectionEvent> infections;
  std::vector<YearMonth> months;
};

// Deterministic in (config, seed); per-org substreams make generation order
// independent. Events mode expands each profile into event files that
// re-aggregate to the generated profile up to integer-count rounding: counts
// are rounded per year then spread over months, so rates move by at most
// 0.5/(employees*12) and fractions are emitted exactly.
Dataset generate_dataset(const SynthConfig& config, Mode mode);

void write_ground_truth(const GroundTruth& truth, std::ostream& out);
GroundTruth read_ground_truth(std::istream& in);
GroundTruth read_ground_truth_file(const std::string& path);

}  // namespace riskpipe::synth
