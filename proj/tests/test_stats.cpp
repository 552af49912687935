#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "riskpipe/common.hpp"
#include "riskpipe/stats.hpp"

using namespace riskpipe;
using namespace riskpipe::stats;

namespace {

std::vector<double> random_with_ties(std::mt19937_64& rng, std::size_t n, int support) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() % static_cast<std::uint64_t>(support));
  return v;
}

std::vector<double> random_normals(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    v[i] = r * std::cos(2.0 * 3.14159265358979323846 * u2);
    v[i + 1] = r * std::sin(2.0 * 3.14159265358979323846 * u2);
  }
  if (n % 2) v[n - 1] = v[0] == 0.0 ? 0.1 : -v[0] * 0.5;
  return v;
}

}  // namespace

TEST_CASE("average ranks") {
  CHECK(average_ranks(std::vector<double>{10, 20, 30}) == std::vector<double>{1, 2, 3});
  CHECK(average_ranks(std::vector<double>{1, 2, 2, 3}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK(average_ranks(std::vector<double>{5, 5, 5}) == std::vector<double>{2, 2, 2});
  CHECK_THROWS_AS(average_ranks(std::vector<double>{}), DataError);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto v = random_with_ties(rng, 1 + rng() % 200, 12);
    auto ranks = average_ranks(v);
    double sum = std::accumulate(ranks.begin(), ranks.end(), 0.0);
    double n = static_cast<double>(v.size());
    CHECK(sum == doctest::Approx(n * (n + 1.0) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("spearman basics") {
  std::vector<double> x{1, 2, 3, 4};
  std::vector<double> y{10, 100, 1000, 10000};
  auto r = spearman(x, y);
  CHECK(r.statistic == doctest::Approx(1.0));
  CHECK(r.p_value == 0.0);

  std::vector<double> rev_x{1, 2, 3}, rev_y{3, 2, 1};
  auto rr = spearman(rev_x, rev_y);
  CHECK(rr.statistic == doctest::Approx(-1.0));
  CHECK(rr.p_value == 0.0);

  std::vector<double> constant{2, 2, 2, 2};
  CHECK_THROWS_WITH_AS(spearman(constant, y), doctest::Contains("undefined correlation"),
                       DataError);
  std::vector<double> two{1, 2};
  CHECK_THROWS_AS(spearman(two, two), DataError);
}

TEST_CASE("spearman equals Pearson of midranks on tied data") {
  std::mt19937_64 rng(2015);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 20;
    auto x = random_with_ties(rng, n, 6);
    auto y = random_with_ties(rng, n, 6);
    double rho_oracle;
    try {
      rho_oracle = oracles::spearman_by_counting(x, y);
    } catch (...) {
      continue;
    }
    if (!std::isfinite(rho_oracle)) continue;  // constant draw
    auto r = spearman(x, y);
    CHECK(std::fabs(r.statistic - rho_oracle) < 1e-12);
  }
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto x = random_normals(rng, 30);
    auto y = random_normals(rng, 30);
    auto base = spearman(x, y);
    std::vector<double> tx(x.size()), ty(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      tx[i] = std::exp(x[i]);            // strictly increasing
      ty[i] = y[i] * 3.0 + 7.0;          // affine increasing
    }
    auto mapped = spearman(tx, ty);
    CHECK(std::fabs(base.statistic - mapped.statistic) < 1e-12);
  }
}

TEST_CASE("mann-whitney basics") {
  std::vector<double> a(10), b(10);
  std::iota(a.begin(), a.end(), 1.0);
  std::iota(b.begin(), b.end(), 1.0);
  auto equal = mann_whitney(a, b);
  CHECK(equal.statistic == doctest::Approx(50.0));  // n1*n2/2
  CHECK(equal.p_value > 0.9);

  std::vector<double> hi(20), lo(20);
  for (int i = 0; i < 20; ++i) {
    hi[i] = 100.0 + i;
    lo[i] = i;
  }
  auto separated = mann_whitney(hi, lo);
  CHECK(separated.statistic == doctest::Approx(400.0));
  CHECK(separated.p_value < 0.001);

  std::vector<double> flat{3, 3, 3}, flat2{3, 3};
  CHECK_THROWS_WITH_AS(mann_whitney(flat, flat2), doctest::Contains("degenerate ranking"),
                       DataError);
  CHECK_THROWS_AS(mann_whitney({}, flat), DataError);
}

TEST_CASE("mann-whitney approximation tracks exact enumeration at n=6+6") {
  // Continuous draws: the 0.5 continuity correction assumes the integer U
  // lattice, which heavy ties would break.
  std::mt19937_64 rng(606);
  for (int t = 0; t < 60; ++t) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = static_cast<double>(rng()) / static_cast<double>(~0ull);
    for (auto& x : b) x = static_cast<double>(rng()) / static_cast<double>(~0ull);
    double p_approx = mann_whitney(a, b).p_value;
    double p_exact = oracles::mww_exact_two_sided_p(a, b);
    CHECK(std::fabs(p_approx - p_exact) <= 0.02);
  }
}

TEST_CASE("mann-whitney U is invariant under a common increasing transform") {
  std::mt19937_64 rng(7);
  auto a = random_normals(rng, 25);
  auto b = random_normals(rng, 35);
  auto base = mann_whitney(a, b);
  std::vector<double> ta(a.size()), tb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ta[i] = std::atan(a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) tb[i] = std::atan(b[i]);
  auto mapped = mann_whitney(ta, tb);
  CHECK(base.statistic == doctest::Approx(mapped.statistic).epsilon(1e-12));
}

TEST_CASE("g-test on 2x2 tables") {
  long long independent[2][2] = {{25, 25}, {25, 25}};
  auto ind = g_test(independent);
  CHECK(ind.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ind.p_value == doctest::Approx(1.0).epsilon(1e-12));

  long long assoc[2][2] = {{50, 10}, {10, 50}};
  auto res = g_test(assoc);
  double direct = oracles::g_statistic_direct(assoc);
  CHECK(std::fabs(res.statistic - direct) < 1e-9);
  // 2*(2*50*ln(5/3) + 2*10*ln(1/3)) evaluated directly
  CHECK(res.statistic == doctest::Approx(58.220633).epsilon(1e-6));
  CHECK(res.p_value < 1e-12);

  long long scaled[2][2] = {{500, 100}, {100, 500}};
  auto big = g_test(scaled);
  CHECK(big.statistic == doctest::Approx(10.0 * res.statistic).epsilon(1e-9));

  long long transposed[2][2] = {{50, 10}, {10, 50}};
  std::swap(transposed[0][1], transposed[1][0]);
  CHECK(g_test(transposed).statistic == doctest::Approx(res.statistic).epsilon(1e-12));
  long long row_swapped[2][2] = {{10, 50}, {50, 10}};
  CHECK(g_test(row_swapped).statistic == doctest::Approx(res.statistic).epsilon(1e-12));

  long long zero_cell[2][2] = {{0, 60}, {10, 50}};
  CHECK(std::isfinite(g_test(zero_cell).statistic));  // O=0 contributes nothing

  long long degenerate[2][2] = {{0, 0}, {10, 50}};
  CHECK_THROWS_WITH_AS(g_test(degenerate), doctest::Contains("degenerate table"), DataError);
}

TEST_CASE("ks two-sample basics") {
  std::vector<double> a{1, 2, 3, 4, 5};
  auto same = ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));

  std::vector<double> lo{1, 2, 3}, hi{10, 11, 12};
  auto disjoint = ks_two_sample(lo, hi);
  CHECK(disjoint.statistic == doctest::Approx(1.0));

  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    auto x = random_with_ties(rng, 50, 10);
    auto y = random_with_ties(rng, 40, 10);
    auto res = ks_two_sample(x, y);
    double d_oracle = oracles::ks_d_by_breakpoints(x, y);
    CHECK(res.statistic == doctest::Approx(d_oracle).epsilon(1e-15));
    CHECK(res.statistic >= 0.0);
    CHECK(res.statistic <= 1.0);
  }
}

TEST_CASE("doubling a sample leaves its empirical CDF and D unchanged") {
  std::mt19937_64 rng(23);
  auto a = random_with_ties(rng, 30, 7);
  auto b = random_with_ties(rng, 25, 7);
  auto base = ks_two_sample(a, b);
  std::vector<double> doubled = a;
  doubled.insert(doubled.end(), a.begin(), a.end());
  auto res = ks_two_sample(doubled, b);
  CHECK(res.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
}

TEST_CASE("tail probabilities") {
  CHECK(normal_sf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_sf(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-9));
  CHECK(normal_sf(-1.0) + normal_sf(1.0) == doctest::Approx(1.0).epsilon(1e-12));

  // Quadrature oracle for the chi-square upper tail.
  CHECK(std::fabs(chi2_sf(6.635, 1.0) - 0.01) < 1e-4);
  for (double x : {0.5, 2.0, 6.635, 15.0}) {
    for (double df : {1.0, 2.0, 5.0}) {
      double oracle = oracles::chi2_sf_by_quadrature(x, df);
      CHECK(chi2_sf(x, df) == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
  CHECK(chi2_sf(3.841458820694124, 1.0) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK_THROWS_AS(chi2_sf(1.0, 0.0), DataError);
  CHECK_THROWS_AS(chi2_sf(-1.0, 1.0), DataError);

  for (double t : {0.0, 0.5, 2.0, 7.5}) {
    for (double df : {1.0, 4.0, 30.0}) {
      CHECK(student_t_sf(t, df) + student_t_sf(-t, df) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // Student t with 1 df is the Cauchy distribution: SF(1) = 1/4.
  CHECK(student_t_sf(1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-10));
  // Large df approaches the normal.
  CHECK(student_t_sf(1.96, 1e7) == doctest::Approx(normal_sf(1.96)).epsilon(1e-4));
  CHECK_THROWS_AS(student_t_sf(0.0, -1.0), DataError);

  CHECK(kolmogorov_sf(0.0) == doctest::Approx(1.0));
  // Classic alpha = 0.05 critical value.
  CHECK(kolmogorov_sf(1.358) == doctest::Approx(0.05).epsilon(0.02));
  // Continuity across the theta-inversion/series switch at 1.18; the bound
  // allows the function's own slope over the 2e-7 gap.
  CHECK(std::fabs(kolmogorov_sf(1.1799999) - kolmogorov_sf(1.1800001)) < 1e-6);
  {
    // Independent alternating-series evaluation just below the switch.
    double lambda = 1.17;
    double sum = 0.0, sign = 1.0;
    for (int j = 1; j < 200; ++j) {
      double term = std::exp(-2.0 * j * j * lambda * lambda);
      sum += sign * term;
      sign = -sign;
      if (term < 1e-18) break;
    }
    CHECK(kolmogorov_sf(lambda) == doctest::Approx(2.0 * sum).epsilon(1e-12));
  }
  CHECK(kolmogorov_sf(8.0) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(tail_prob(TailKind::NormalSF, 0.0) == doctest::Approx(0.5));
  CHECK(tail_prob(TailKind::Chi2SF, 6.635, 1.0) == doctest::Approx(0.01).epsilon(1e-2));
  CHECK(tail_prob(TailKind::StudentTSF, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(tail_prob(TailKind::KolmogorovSF, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("student t quantile inverts the survival function") {
  for (double sf : {0.25, 0.05, 0.01, 0.005}) {
    for (double df : {3.0, 10.0, 120.0}) {
      double t = student_t_sf_inverse(sf, df);
      CHECK(student_t_sf(t, df) == doctest::Approx(sf).epsilon(1e-9));
    }
  }
  // Frozen reference: the 97.5% point of t with 10 df.
  CHECK(student_t_sf_inverse(0.025, 10.0) == doctest::Approx(2.228138852).epsilon(1e-6));
  CHECK_THROWS_AS(student_t_sf_inverse(0.7, 10.0), DataError);
}

TEST_CASE("smoke calibration under the null at alpha=0.05") {
  std::mt19937_64 rng(888);
  const int sims = 800;
  const double alpha = 0.05;

  int rej_spearman = 0, rej_mww = 0, rej_g = 0, rej_ks = 0;
  for (int s = 0; s < sims; ++s) {
    auto x = random_normals(rng, 40);
    auto y = random_normals(rng, 40);
    if (spearman(x, y).p_value < alpha) ++rej_spearman;

    auto a = random_normals(rng, 30);
    auto b = random_normals(rng, 30);
    if (mann_whitney(a, b).p_value < alpha) ++rej_mww;

    long long table[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < 200; ++i) ++table[rng() % 2][rng() % 2];
    if (table[0][0] + table[0][1] == 0 || table[1][0] + table[1][1] == 0 ||
        table[0][0] + table[1][0] == 0 || table[0][1] + table[1][1] == 0) {
      --s;
      continue;
    }
    if (g_test(table).p_value < alpha) ++rej_g;

    auto u = random_normals(rng, 150);
    auto v = random_normals(rng, 150);
    if (ks_two_sample(u, v).p_value < alpha) ++rej_ks;
  }
  auto rate = [&](int rejected) { return static_cast<double>(rejected) / sims; };
  CHECK(rate(rej_spearman) == doctest::Approx(alpha).epsilon(0.7));
  CHECK(rate(rej_mww) == doctest::Approx(alpha).epsilon(0.7));
  CHECK(rate(rej_g) == doctest::Approx(alpha).epsilon(0.7));
  CHECK(rate(rej_ks) == doctest::Approx(alpha).epsilon(0.8));
  MESSAGE("rates: spearman=" << rate(rej_spearman) << " mww=" << rate(rej_mww)
                             << " g=" << rate(rej_g) << " ks=" << rate(rej_ks));
}
