#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace riskpipe::stats {

enum class Method { Spearman, MannWhitney, GTest, KsTwoSample };

struct SampleSize {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

struct TestResult {
  Method method{};
  double statistic = 0.0;
  double p_value = 1.0;
  SampleSize n;
};

// 1-based ranks; tied values receive the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> values);

// Rank correlation: Pearson correlation of the two rank vectors, p-value via
// the t approximation with n-2 degrees of freedom (two-sided).
TestResult spearman(std::span<const double> x, std::span<const double> y);

// Rank-sum test of stochastic ordering between two samples. The statistic is
// the U of the first sample; two-sided p-value via the normal approximation
// with tie correction and 0.5 continuity correction.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b);

// Log-likelihood-ratio test of independence on a 2x2 contingency table.
// Cells with a zero count contribute zero to the sum.
TestResult g_test(const long long (&table)[2][2]);

// Two-sample Kolmogorov-Smirnov; p from the asymptotic Kolmogorov
// distribution at sqrt(n1*n2/(n1+n2)) * D.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

enum class TailKind { NormalSF, Chi2SF, StudentTSF, KolmogorovSF };

// Survival probabilities. `arg2` is the degrees of freedom for Chi2SF and
// StudentTSF and is ignored for the other kinds.
double tail_prob(TailKind kind, double arg, double arg2 = 0.0);

double normal_sf(double z);
double chi2_sf(double x, double df);
double student_t_sf(double t, double df);
double kolmogorov_sf(double lambda);

// Underlying special functions, exposed for reuse and testing.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
double regularized_incomplete_beta(double x, double a, double b);

// Positive t with student_t_sf(t, df) == sf, found by bisection. Requires
// 0 < sf <= 0.5.
double student_t_sf_inverse(double sf, double df);

}  // namespace riskpipe::stats
