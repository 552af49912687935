#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "riskpipe/models.hpp"
#include "riskpipe/synth.hpp"

using namespace riskpipe;
using namespace riskpipe::synth;

TEST_CASE("config validation") {
  SynthConfig config;
  config.n_orgs = 100;
  CHECK_NOTHROW(validate(config));

  SynthConfig too_small = config;
  too_small.n_orgs = 10;
  CHECK_THROWS_AS(validate(too_small), DataError);

  SynthConfig all_zero_bots = config;
  all_zero_bots.zero_bot_share = 1.0;
  CHECK_THROWS_AS(validate(all_zero_bots), DataError);

  SynthConfig bad_mixture = config;
  bad_mixture.tls_cfg_mixture.mass_at_zero = 0.8;
  bad_mixture.tls_cfg_mixture.mass_at_one = 0.5;
  CHECK_THROWS_AS(validate(bad_mixture), DataError);

  SynthConfig bad_sigma = config;
  bad_sigma.sigma = -0.5;
  CHECK_THROWS_AS(validate(bad_sigma), DataError);
}

TEST_CASE("identical config and seed give identical datasets") {
  SynthConfig config;
  config.n_orgs = 300;
  config.seed = 12345;
  Dataset a = generate_dataset(config, Mode::Events);
  Dataset b = generate_dataset(config, Mode::Events);
  CHECK(a.profiles == b.profiles);
  CHECK(a.tls == b.tls);
  CHECK(a.services == b.services);
  CHECK(a.seeders == b.seeders);
  CHECK(a.infections == b.infections);

  config.seed = 54321;
  Dataset c = generate_dataset(config, Mode::Events);
  CHECK(a.profiles != c.profiles);
}

TEST_CASE("defaults land near the configured shares") {
  SynthConfig config;
  config.n_orgs = 10000;
  config.seed = 777;
  Dataset data = generate_dataset(config, Mode::Profiles);
  REQUIRE(data.profiles.size() == 10000);

  std::size_t zero_bots = 0, zero_p2p_bots = 0, bot_positive = 0;
  for (const auto& p : data.profiles) {
    if (!p.bot_present) {
      ++zero_bots;
    } else {
      ++bot_positive;
      if (!p.p2p_present) ++zero_p2p_bots;
    }
  }
  double zero_share = static_cast<double>(zero_bots) / 10000.0;
  CHECK(zero_share == doctest::Approx(0.67).epsilon(0.03));
  double zero_p2p_share = static_cast<double>(zero_p2p_bots) / static_cast<double>(bot_positive);
  CHECK(zero_p2p_share == doctest::Approx(0.135).epsilon(0.15));
}

TEST_CASE("generated profiles satisfy the profile invariants") {
  SynthConfig config;
  config.n_orgs = 2000;
  config.seed = 31;
  Dataset data = generate_dataset(config, Mode::Profiles);
  for (const auto& p : data.profiles) {
    CHECK(p.employees >= 1);
    for (double frac : {p.tls_cfg_frac, p.tls_cert_frac, p.risky_frac, p.neutral_frac,
                        p.reasonable_frac}) {
      CHECK(frac >= 0.0);
      CHECK(frac <= 1.0);
    }
    CHECK(p.risky_frac + p.neutral_frac + p.reasonable_frac ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.bot_present == (p.bot_rate > 0.0));
    CHECK(p.p2p_present == (p.p2p_rate > 0.0));
  }
}

TEST_CASE("responses are reconstructible from the ground truth") {
  SynthConfig config;
  config.n_orgs = 500;
  config.seed = 8;
  config.sigma = 0.0;  // noise off: the linear predictor is the whole response
  Dataset data = generate_dataset(config, Mode::Profiles);
  const Coefficients& beta = data.truth.pooled;
  for (const auto& p : data.profiles) {
    if (!p.bot_present) continue;
    models::P2pTransform t = models::transform_p2p(p.p2p_rate);
    double predicted = beta.beta1 * t.t0 + beta.beta2 * t.t_hat + beta.beta3 * p.tls_cfg_frac +
                       beta.beta4 * p.tls_cert_frac + beta.beta5 * p.risky_frac +
                       beta.beta6 * p.reasonable_frac + beta.beta0;
    CHECK(std::log(p.bot_rate) == doctest::Approx(predicted).epsilon(1e-9));
  }
}

TEST_CASE("per-industry coefficients are recorded when spread is on") {
  SynthConfig config;
  config.n_orgs = 400;
  config.seed = 91;
  config.industry_coefficient_spread = 0.5;
  config.n_industries = 5;
  Dataset data = generate_dataset(config, Mode::Profiles);
  REQUIRE(data.truth.per_industry.size() == 5);
  bool differs = false;
  for (const auto& [industry, coeffs] : data.truth.per_industry)
    if (coeffs.beta2 != data.truth.pooled.beta2) differs = true;
  CHECK(differs);

  std::ostringstream out;
  write_ground_truth(data.truth, out);
  std::istringstream in(out.str());
  GroundTruth parsed = read_ground_truth(in);
  CHECK(parsed.pooled.beta1 == data.truth.pooled.beta1);
  CHECK(parsed.sigma == data.truth.sigma);
  REQUIRE(parsed.per_industry.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(parsed.per_industry[i].first == data.truth.per_industry[i].first);
    CHECK(parsed.per_industry[i].second.beta6 == data.truth.per_industry[i].second.beta6);
  }
}

TEST_CASE("events expand and re-aggregate to the generated profiles") {
  SynthConfig config;
  config.n_orgs = 200;
  config.seed = 2024;
  Dataset data = generate_dataset(config, Mode::Events);

  orgmap::Registry registry;
  for (const auto& org : data.orgs) registry.add(org);
  orgmap::IpIndex index = orgmap::IpIndex::build(data.ranges, registry);
  riskvectors::AggregateInputs inputs{data.tls, data.services, data.seeders, data.infections};
  riskvectors::AggregateDiagnostics diag;
  auto aggregated =
      riskvectors::aggregate_profiles(inputs, registry, index, data.months, &diag);
  CHECK(diag.unattributed_infections == 0);
  CHECK(diag.unattributed_tls == 0);

  REQUIRE(aggregated.size() == data.profiles.size());
  for (std::size_t i = 0; i < aggregated.size(); ++i) {
    const auto& truth = data.profiles[i];
    const auto& got = aggregated[i];
    REQUIRE(got.org_id == truth.org_id);
    CHECK(got.industry == truth.industry);
    CHECK(got.employees == truth.employees);
    double quantum = 1.0 / (static_cast<double>(truth.employees) * 12.0);
    CHECK(std::fabs(got.bot_rate - truth.bot_rate) <= quantum);
    CHECK(std::fabs(got.p2p_rate - truth.p2p_rate) <= 1e-12);
    CHECK(std::fabs(got.tls_cfg_frac - truth.tls_cfg_frac) <= 1e-12);
    CHECK(std::fabs(got.tls_cert_frac - truth.tls_cert_frac) <= 1e-12);
    CHECK(std::fabs(got.risky_frac - truth.risky_frac) <= 1e-12);
    CHECK(std::fabs(got.neutral_frac - truth.neutral_frac) <= 1e-12);
    CHECK(std::fabs(got.reasonable_frac - truth.reasonable_frac) <= 1e-12);
    CHECK(got.n_tls_services == truth.n_tls_services);
    CHECK(got.n_classified_services == truth.n_classified_services);
  }
}
