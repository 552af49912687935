#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "riskpipe/models.hpp"
#include "riskpipe/synth.hpp"

using namespace riskpipe;
using namespace riskpipe::models;
using riskvectors::RiskProfile;

namespace {

synth::SynthConfig base_config(std::uint64_t seed, std::size_t n_orgs = 5000) {
  synth::SynthConfig config;
  config.n_orgs = n_orgs;
  config.seed = seed;
  return config;
}

std::vector<RiskProfile> synth_profiles(std::uint64_t seed, std::size_t n_orgs = 5000,
                                        double spread = 0.0) {
  synth::SynthConfig config = base_config(seed, n_orgs);
  config.industry_coefficient_spread = spread;
  return synth::generate_dataset(config, synth::Mode::Profiles).profiles;
}

const Coefficient& coef(const RegressionFit& fit, const std::string& name) {
  for (const auto& c : fit.coefficients)
    if (c.name == name) return c;
  throw std::runtime_error("missing coefficient " + name);
}

}  // namespace

TEST_CASE("p2p transform") {
  CHECK(transform_p2p(0.0).t0 == 1.0);
  CHECK(transform_p2p(0.0).t_hat == 0.0);
  CHECK(transform_p2p(1.0).t0 == 0.0);
  CHECK(transform_p2p(1.0).t_hat == 0.0);
  CHECK(transform_p2p(std::exp(1.0)).t_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(transform_p2p(-0.1), DataError);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    double t = std::exp(-10.0 + 14.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53);
    auto tr = transform_p2p(t);
    CHECK(tr.t0 == 0.0);
    CHECK(std::exp(tr.t_hat) == doctest::Approx(t).epsilon(1e-12));
  }
}

TEST_CASE("design construction") {
  std::vector<RiskProfile> profiles;
  for (int i = 0; i < 13; ++i) {
    RiskProfile p;
    p.org_id = "o" + std::to_string(i);
    p.industry = "ind";
    p.employees = 10;
    p.bot_rate = i < 3 ? 0.0 : 0.5;
    p.bot_present = p.bot_rate > 0;
    p.p2p_rate = i % 2 ? 0.0 : 0.01;
    p.p2p_present = p.p2p_rate > 0;
    p.tls_cfg_frac = 0.1 * (i % 10);
    p.tls_cert_frac = 0.05 * (i % 10);
    p.risky_frac = 0.2;
    p.neutral_frac = 0.3;
    p.reasonable_frac = 0.5;
    profiles.push_back(p);
  }
  Design d = build_design(profiles);
  CHECK(d.excluded == 3);
  CHECK(d.x.rows() == 10);
  CHECK(d.x.cols() == 7);
  CHECK(d.column_names.back() == "intercept");

  // Rows with p2p_rate 0 carry t0 = 1, t_hat = 0, response ln(bot_rate).
  bool found_zero_p2p = false;
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    if (d.x(i, 0) == 1.0) {
      found_zero_p2p = true;
      CHECK(d.x(i, 1) == 0.0);
    }
    CHECK(d.x(i, 6) == 1.0);
    CHECK(d.y(i) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  }
  CHECK(found_zero_p2p);

  SUBCASE("fewer than 10 usable rows is insufficient data") {
    std::vector<RiskProfile> three(profiles.begin(), profiles.begin() + 3);
    CHECK_THROWS_WITH_AS(build_design(three), doctest::Contains("insufficient data"), DataError);
    CHECK_THROWS_AS(build_design({}), DataError);
  }
}

TEST_CASE("ols recovers an exact linear relationship") {
  Eigen::MatrixXd x(10, 2);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    x(i, 1) = 1.0;
    y(i) = 1.0 + 2.0 * i;
  }
  std::vector<std::string> names{"slope", "intercept"};
  RegressionFit fit = fit_ols(x, y, names, 0.98);
  CHECK(coef(fit, "slope").estimate == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(coef(fit, "intercept").estimate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.sigma == doctest::Approx(0.0));
  CHECK_THROWS_WITH_AS(model_aic(fit), doctest::Contains("degenerate likelihood"), DataError);
}

TEST_CASE("ols rejects rank-deficient designs naming the columns") {
  Eigen::MatrixXd x(12, 3);
  Eigen::VectorXd y(12);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 12; ++i) {
    double v = static_cast<double>(rng() % 100);
    x(i, 0) = v;
    x(i, 1) = v;  // duplicate
    x(i, 2) = 1.0;
    y(i) = v * 2.0;
  }
  std::vector<std::string> names{"a", "a_copy", "intercept"};
  CHECK_THROWS_WITH_AS(fit_ols(x, y, names, 0.98), doctest::Contains("rank-deficient"),
                       DataError);
}

TEST_CASE("ols matches the synthetic forward model") {
  auto profiles = synth_profiles(99);
  Design d = build_design(profiles);
  RegressionFit fit = fit_ols(d.x, d.y, d.column_names, 0.99);
  synth::Coefficients truth;
  const std::pair<const char*, double> expected[] = {
      {"t0", truth.beta1},          {"t_hat", truth.beta2},
      {"tls_cfg_frac", truth.beta3}, {"tls_cert_frac", truth.beta4},
      {"risky_frac", truth.beta5},  {"reasonable_frac", truth.beta6},
      {"intercept", truth.beta0},
  };
  for (const auto& [name, value] : expected) {
    const Coefficient& c = coef(fit, name);
    CHECK(c.ci_low <= value);
    CHECK(value <= c.ci_high);
  }
  CHECK(fit.sigma == doctest::Approx(1.0).epsilon(0.05));

  SUBCASE("residuals are orthogonal to every design column") {
    Eigen::VectorXd beta(7);
    for (int j = 0; j < 7; ++j) beta(j) = fit.coefficients[static_cast<std::size_t>(j)].estimate;
    Eigen::VectorXd resid = d.y - d.x * beta;
    for (int j = 0; j < 7; ++j) {
      double dot = std::fabs(resid.dot(d.x.col(j)));
      double scale = resid.norm() * d.x.col(j).norm();
      CHECK(dot / scale < 1e-6);
    }
    // Fitted + residuals reconstruct the response.
    Eigen::VectorXd rebuilt = d.x * beta + resid;
    CHECK((rebuilt - d.y).lpNorm<Eigen::Infinity>() <
          1e-9 * d.y.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("aic accounting") {
  RegressionFit fake;
  fake.n = 100;
  fake.rss = 100.0;
  fake.k = 8;
  CHECK(model_aic(fake) == doctest::Approx(16.0).epsilon(1e-12));

  RegressionFit more_params = fake;
  more_params.k = 9;
  CHECK(model_aic(more_params) > model_aic(fake));

  RegressionFit better_fit = fake;
  better_fit.rss = 50.0;
  CHECK(model_aic(better_fit) < model_aic(fake));

  RegressionFit exact = fake;
  exact.rss = 0.0;
  CHECK_THROWS_AS(model_aic(exact), DataError);
}

TEST_CASE("variant parameter accounting with 22 industries") {
  auto profiles = synth_profiles(7, 5000);
  VariantFit pooled = fit_variants(profiles, Variant::Pooled);
  CHECK(pooled.total_coefficients == 7);
  VariantFit unpooled = fit_variants(profiles, Variant::Unpooled);
  CHECK(unpooled.per_industry.size() == 22);
  CHECK(unpooled.total_coefficients == 154);
  VariantFit fixed = fit_variants(profiles, Variant::FixedEffects);
  CHECK(fixed.total_coefficients == 28);
  CHECK(fixed.combined->coefficients.front().name == "t0");
  CHECK(fixed.combined->coefficients.back().name == "intercept");
}

TEST_CASE("model comparison prefers the generating structure") {
  int pooled_wins = 0, unpooled_wins = 0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    auto homogeneous = synth_profiles(200 + s, 5000, 0.0);
    if (compare_models(homogeneous).selected == "pooled") ++pooled_wins;
    auto heterogeneous = synth_profiles(300 + s, 5000, 0.5);
    if (compare_models(heterogeneous).selected == "unpooled") ++unpooled_wins;
  }
  CHECK(pooled_wins >= seeds - 1);
  CHECK(unpooled_wins >= seeds - 1);
}

TEST_CASE("single industry collapses pooled and unpooled") {
  synth::SynthConfig config = base_config(11, 1000);
  config.n_industries = 1;
  auto profiles = synth::generate_dataset(config, synth::Mode::Profiles).profiles;
  ModelComparison cmp = compare_models(profiles);
  REQUIRE(cmp.entries.size() == 2);  // fixed effects skipped
  CHECK(cmp.entries[0].name == "pooled");
  CHECK(cmp.entries[1].name == "unpooled");
  CHECK(cmp.entries[0].aic == doctest::Approx(cmp.entries[1].aic).epsilon(1e-9));
  CHECK(cmp.selected == "pooled");  // ties prefer the simpler model
}

TEST_CASE("comparison is invariant to industry renaming and row order") {
  auto profiles = synth_profiles(21, 3000, 0.3);
  ModelComparison base = compare_models(profiles);

  std::vector<RiskProfile> renamed = profiles;
  for (auto& p : renamed) p.industry = "zz_" + p.industry;
  std::mt19937_64 rng(9);
  std::shuffle(renamed.begin(), renamed.end(), rng);
  ModelComparison mapped = compare_models(renamed);
  CHECK(mapped.selected == base.selected);
  REQUIRE(mapped.entries.size() == base.entries.size());
  for (std::size_t i = 0; i < base.entries.size(); ++i)
    CHECK(mapped.entries[i].aic == doctest::Approx(base.entries[i].aic).epsilon(1e-9));
}

TEST_CASE("unpooled never fits worse than pooled on the same rows") {
  for (std::uint64_t seed : {31ull, 32ull, 33ull}) {
    auto profiles = synth_profiles(seed, 4000, 0.2);
    // Restrict to industries the per-industry variant retains.
    VariantFit unpooled = fit_variants(profiles, Variant::Unpooled);
    std::set<std::string> kept;
    for (const auto& f : unpooled.per_industry) kept.insert(f.industry);
    std::vector<RiskProfile> subset;
    for (const auto& p : profiles)
      if (kept.count(p.industry)) subset.push_back(p);
    VariantFit pooled = fit_variants(subset, Variant::Pooled);
    double unpooled_rss = 0.0;
    for (const auto& f : unpooled.per_industry) unpooled_rss += f.fit.rss;
    CHECK(unpooled_rss <= pooled.combined->rss * (1.0 + 1e-12));
  }
}

TEST_CASE("effect multipliers") {
  CHECK(effect_multiplier(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(effect_multiplier(-5.763, 1.0) == doctest::Approx(0.00314).epsilon(0.02));
  CHECK(1.0 / effect_multiplier(-5.763, 1.0) == doctest::Approx(318.0).epsilon(0.005));
  CHECK(effect_multiplier(0.841, std::log(1.1)) == doctest::Approx(1.083).epsilon(0.001));
  CHECK(effect_multiplier(2.5, 1.0) * effect_multiplier(-2.5, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(effect_multiplier(std::nan(""), 1.0), DataError);
}

namespace {

// Hand-built population with a configurable bot/p2p presence odds ratio.
std::vector<RiskProfile> presence_population(std::mt19937_64& rng, int n, double p2p_odds_mult) {
  std::vector<RiskProfile> profiles;
  for (int i = 0; i < n; ++i) {
    RiskProfile p;
    p.org_id = "o" + std::to_string(i);
    p.industry = "ind";
    p.employees = 100;
    bool bots = rng() % 100 < 40;
    double base_p2p = 0.3;
    double odds = base_p2p / (1.0 - base_p2p) * (bots ? p2p_odds_mult : 1.0);
    double prob = odds / (1.0 + odds);
    bool p2p = (static_cast<double>(rng() >> 11) * 0x1.0p-53) < prob;
    p.bot_rate = bots ? 0.01 + 0.001 * static_cast<double>(rng() % 100) : 0.0;
    p.bot_present = bots;
    p.p2p_rate = p2p ? 0.001 * (1 + rng() % 50) : 0.0;
    p.p2p_present = p2p;
    p.tls_cfg_frac = 0.01 * static_cast<double>(rng() % 101);
    p.tls_cert_frac = 0.01 * static_cast<double>(rng() % 101);
    p.risky_frac = 0.01 * static_cast<double>(rng() % 51);
    p.reasonable_frac = 0.01 * static_cast<double>(rng() % 50);
    p.neutral_frac = 1.0 - p.risky_frac - p.reasonable_frac;
    profiles.push_back(p);
  }
  return profiles;
}

}  // namespace

TEST_CASE("presence analysis shape and power") {
  std::mt19937_64 rng(55);
  auto profiles = presence_population(rng, 800, 10.0);
  PresenceAnalysis analysis = presence_analysis(profiles);
  CHECK(analysis.rank_tests.size() == 5);
  CHECK(analysis.rank_tests[0].label == "p2p_rate");
  CHECK(analysis.presence_gtest.result.method == stats::Method::GTest);

  SUBCASE("a 10x odds shift is detected in at least 95 of 100 seeded runs") {
    int detected = 0;
    for (int s = 0; s < 100; ++s) {
      std::mt19937_64 seed_rng(1000 + s);
      auto pop = presence_population(seed_rng, 600, 10.0);
      if (presence_analysis(pop).presence_gtest.result.p_value < 0.01) ++detected;
    }
    CHECK(detected >= 95);
  }

  SUBCASE("groups drawn identically give a p-value far from rejection") {
    // Same vector values in both groups: U sits exactly at its mean.
    std::vector<RiskProfile> mirrored;
    for (int i = 0; i < 40; ++i) {
      RiskProfile p;
      p.org_id = "m" + std::to_string(i);
      p.industry = "ind";
      p.employees = 10;
      p.bot_rate = i < 20 ? 0.5 : 0.0;
      p.bot_present = i < 20;
      p.p2p_rate = (i % 20) < 10 ? 0.3 : 0.0;
      p.p2p_present = p.p2p_rate > 0;
      double step = static_cast<double>(i % 20) / 20.0;
      p.tls_cfg_frac = step;
      p.tls_cert_frac = step;
      p.risky_frac = step * 0.5;
      p.reasonable_frac = 0.5 - step * 0.5 + 0.25;
      p.neutral_frac = 1.0 - p.risky_frac - p.reasonable_frac;
      mirrored.push_back(p);
    }
    PresenceAnalysis sym = presence_analysis(mirrored);
    for (const auto& t : sym.rank_tests) {
      CHECK(t.result.p_value > 0.5);
      CHECK(t.direction == "tied");
    }
  }

  SUBCASE("one group empty is an error") {
    std::vector<RiskProfile> all_bots = presence_population(rng, 50, 1.0);
    for (auto& p : all_bots) {
      p.bot_rate = 0.5;
      p.bot_present = true;
    }
    CHECK_THROWS_AS(presence_analysis(all_bots), DataError);
  }
}

TEST_CASE("correlation table") {
  SUBCASE("bot_rate identical to p2p_rate gives rho 1") {
    std::mt19937_64 rng(66);
    std::vector<RiskProfile> profiles;
    for (int i = 0; i < 50; ++i) {
      RiskProfile p;
      p.org_id = "o" + std::to_string(i);
      p.industry = "ind";
      p.employees = 10;
      p.bot_rate = 0.001 * (1 + rng() % 1000);
      p.bot_present = true;
      p.p2p_rate = p.bot_rate;
      p.p2p_present = true;
      p.tls_cfg_frac = 0.01 * static_cast<double>(rng() % 101);
      p.tls_cert_frac = 0.01 * static_cast<double>(rng() % 101);
      p.risky_frac = 0.3;  // constant: per-row error marker
      p.reasonable_frac = 0.01 * static_cast<double>(rng() % 50);
      p.neutral_frac = 1.0 - p.risky_frac - p.reasonable_frac;
      profiles.push_back(p);
    }
    auto rows = correlation_table(profiles);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].label == "p2p_rate");
    CHECK(rows[0].ok);
    CHECK(rows[0].rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!rows[3].ok);  // constant risky_frac
    CHECK(rows[3].error.find("undefined correlation") != std::string::npos);
    CHECK(rows[4].ok);  // other rows still computed
  }

  SUBCASE("table-3 synthesis reproduces the sign pattern in >= 95 of 100 seeds") {
    int matches = 0;
    for (int s = 0; s < 100; ++s) {
      auto profiles = synth_profiles(5000 + s, 4000);
      auto rows = correlation_table(profiles);
      bool ok = rows[0].ok && rows[0].rho > 0 && rows[1].ok && rows[1].rho > 0 && rows[2].ok &&
                rows[2].rho > 0 && rows[3].ok && rows[3].rho > 0 && rows[4].ok &&
                rows[4].rho < 0;
      if (ok) ++matches;
    }
    CHECK(matches >= 95);
  }

  SUBCASE("independent noise stays below |rho| 0.1 at n=1000") {
    int quiet = 0;
    std::mt19937_64 rng(77);
    for (int s = 0; s < 100; ++s) {
      std::vector<RiskProfile> profiles;
      for (int i = 0; i < 1000; ++i) {
        RiskProfile p;
        p.org_id = "o" + std::to_string(i);
        p.industry = "ind";
        p.employees = 10;
        p.bot_rate = 1e-6 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p.bot_present = true;
        p.p2p_rate = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p.p2p_present = p.p2p_rate > 0;
        p.tls_cfg_frac = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p.tls_cert_frac = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p.risky_frac = 0.5 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p.reasonable_frac = 0.5 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p.neutral_frac = 1.0 - p.risky_frac - p.reasonable_frac;
        profiles.push_back(p);
      }
      auto rows = correlation_table(profiles);
      bool all_small = true;
      for (const auto& r : rows) all_small = all_small && r.ok && std::fabs(r.rho) < 0.1;
      if (all_small) ++quiet;
    }
    CHECK(quiet >= 95);
  }

  SUBCASE("needs 3 bot-positive profiles") {
    std::mt19937_64 rng(1);
    auto profiles = presence_population(rng, 5, 1.0);
    for (auto& p : profiles) {
      p.bot_rate = 0.0;
      p.bot_present = false;
    }
    CHECK_THROWS_AS(correlation_table(profiles), DataError);
  }
}

TEST_CASE("industry ks matrix") {
  SUBCASE("22 industries give 231 pairs") {
    auto profiles = synth_profiles(88, 5000);
    KsMatrix matrix = industry_ks_matrix(profiles, 0.01);
    CHECK(matrix.pairs.size() == 231);
  }

  SUBCASE("a single industry gives an empty matrix") {
    synth::SynthConfig config = base_config(3, 500);
    config.n_industries = 1;
    auto profiles = synth::generate_dataset(config, synth::Mode::Profiles).profiles;
    KsMatrix matrix = industry_ks_matrix(profiles, 0.01);
    CHECK(matrix.pairs.empty());
    CHECK(matrix.fraction_significant == 0.0);
  }

  SUBCASE("small industries are skipped with a diagnostic") {
    std::mt19937_64 rng(4);
    auto profiles = presence_population(rng, 30, 1.0);
    for (std::size_t i = 0; i < profiles.size(); ++i)
      profiles[i].industry = i < 3 ? "tiny" : (i % 2 ? "left" : "right");
    KsMatrix matrix = industry_ks_matrix(profiles, 0.05);
    CHECK(matrix.skipped_industries == std::vector<std::string>{"tiny"});
    CHECK(matrix.pairs.size() == 1);
  }

  SUBCASE("one shared distribution keeps the significant fraction at or below 0.05") {
    int calibrated = 0;
    for (int s = 0; s < 100; ++s) {
      std::mt19937_64 rng(9000 + s);
      std::vector<RiskProfile> profiles;
      for (int i = 0; i < 660; ++i) {
        RiskProfile p;
        p.org_id = "o" + std::to_string(i);
        p.industry = "ind" + std::to_string(i % 12);
        p.employees = 10;
        p.bot_rate = std::exp(-6.0 + 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 * 6.0);
        p.bot_present = true;
        p.p2p_rate = 0.0;
        p.p2p_present = false;
        p.neutral_frac = 1.0;
        profiles.push_back(p);
      }
      KsMatrix matrix = industry_ks_matrix(profiles, 0.01);
      if (matrix.fraction_significant <= 0.05) ++calibrated;
    }
    CHECK(calibrated >= 95);
  }
}

TEST_CASE("breach association") {
  auto make_population = [](std::mt19937_64& rng, int n, bool preferential) {
    std::vector<RiskProfile> profiles;
    std::vector<ingest::BreachEvent> breaches;
    for (int i = 0; i < n; ++i) {
      RiskProfile p;
      p.org_id = "o" + std::to_string(i);
      p.industry = "ind";
      p.employees = 10;
      bool bots = rng() % 2 == 0;
      p.bot_rate = bots ? 0.1 : 0.0;
      p.bot_present = bots;
      bool p2p = rng() % 3 == 0;
      p.p2p_rate = p2p ? 0.01 : 0.0;
      p.p2p_present = p2p;
      p.neutral_frac = 1.0;
      profiles.push_back(p);
      double breach_prob = preferential ? (bots ? 0.25 : 0.02) : 0.10;
      if ((static_cast<double>(rng() >> 11) * 0x1.0p-53) < breach_prob)
        breaches.push_back({p.org_id, 2015});
    }
    return std::make_pair(profiles, breaches);
  };

  SUBCASE("preferential breaches are detected in >= 95 of 100 seeds") {
    int detected = 0;
    for (int s = 0; s < 100; ++s) {
      std::mt19937_64 rng(42000 + s);
      auto [profiles, breaches] = make_population(rng, 1000, true);
      if (breaches.empty()) continue;
      BreachAssociation assoc = breach_association(profiles, breaches);
      if (assoc.bot.result.p_value < 0.01) ++detected;
    }
    CHECK(detected >= 95);
  }

  SUBCASE("uniform breaches reject at 1% in <= 3 of 100 seeds") {
    int rejected = 0;
    for (int s = 0; s < 100; ++s) {
      std::mt19937_64 rng(52000 + s);
      auto [profiles, breaches] = make_population(rng, 2000, false);
      BreachAssociation assoc = breach_association(profiles, breaches);
      if (assoc.bot.result.p_value < 0.01) ++rejected;
    }
    CHECK(rejected <= 3);
  }

  SUBCASE("zero breach events degenerate the table") {
    std::mt19937_64 rng(1);
    auto [profiles, breaches] = make_population(rng, 100, false);
    std::vector<ingest::BreachEvent> empty;
    CHECK_THROWS_WITH_AS(breach_association(profiles, empty),
                         doctest::Contains("degenerate table"), DataError);
  }

  SUBCASE("breach orgs missing from profiles are counted") {
    std::mt19937_64 rng(2);
    auto [profiles, breaches] = make_population(rng, 200, true);
    breaches.push_back({"stranger", 2015});
    BreachAssociation assoc = breach_association(profiles, breaches);
    CHECK(assoc.unknown_breach_orgs == 1);
  }
}
