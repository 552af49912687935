#include "riskpipe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskpipe/common.hpp"

namespace riskpipe::stats {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite value");
}

double clamp_prob(double p) { return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p); }

// Series expansion of the regularized lower incomplete gamma, valid for
// x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for the regularized upper incomplete
// gamma, valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for the regularized incomplete beta (Lentz).
double incomplete_beta_cf(double x, double a, double b) {
  const double tiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 10000; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw DataError("incomplete gamma requires a > 0");
  if (x < 0.0) throw DataError("incomplete gamma requires x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0) throw DataError("incomplete gamma requires a > 0");
  if (x < 0.0) throw DataError("incomplete gamma requires x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double regularized_incomplete_beta(double x, double a, double b) {
  if (a <= 0.0 || b <= 0.0) throw DataError("incomplete beta requires a, b > 0");
  if (x < 0.0 || x > 1.0) throw DataError("incomplete beta requires x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - std::lgamma(a) -
                          std::lgamma(b) + std::lgamma(a + b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * incomplete_beta_cf(x, a, b) / a;
  return 1.0 - front * incomplete_beta_cf(1.0 - x, b, a) / b;
}

double normal_sf(double z) {
  if (!std::isfinite(z)) throw DataError("normal_sf: non-finite argument");
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double chi2_sf(double x, double df) {
  if (!(df > 0.0)) throw DataError("chi2_sf: df must be positive");
  if (!(x >= 0.0)) throw DataError("chi2_sf: statistic must be nonnegative");
  return regularized_gamma_q(df / 2.0, x / 2.0);
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw DataError("student_t_sf: df must be positive");
  if (!std::isfinite(t)) throw DataError("student_t_sf: non-finite argument");
  double half = 0.5 * regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
  return t >= 0.0 ? half : 1.0 - half;
}

double kolmogorov_sf(double lambda) {
  if (!(lambda >= 0.0)) throw DataError("kolmogorov_sf: lambda must be nonnegative");
  if (lambda < 1e-8) return 1.0;
  if (lambda < 1.18) {
    // Theta-function inversion converges quickly for small lambda.
    double v = kPi * kPi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int j = 1; j < 100; j += 2) {
      double term = std::exp(-static_cast<double>(j) * j * v);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    double cdf = std::sqrt(2.0 * kPi) / lambda * sum;
    return clamp_prob(1.0 - cdf);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j < 1000; ++j) {
    double term = std::exp(-2.0 * static_cast<double>(j) * j * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return clamp_prob(2.0 * sum);
}

double tail_prob(TailKind kind, double arg, double arg2) {
  switch (kind) {
    case TailKind::NormalSF: return normal_sf(arg);
    case TailKind::Chi2SF: return chi2_sf(arg, arg2);
    case TailKind::StudentTSF: return student_t_sf(arg, arg2);
    case TailKind::KolmogorovSF: return kolmogorov_sf(arg);
  }
  throw DataError("tail_prob: unknown kind");
}

double student_t_sf_inverse(double sf, double df) {
  if (!(df > 0.0)) throw DataError("student_t_sf_inverse: df must be positive");
  if (!(sf > 0.0 && sf <= 0.5)) throw DataError("student_t_sf_inverse: sf must be in (0, 0.5]");
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_sf(hi, df) > sf) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (student_t_sf(mid, df) > sf)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> average_ranks(std::span<const double> values) {
  if (values.empty()) throw DataError("average_ranks: empty input");
  require_finite(values, "average_ranks");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

TestResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("spearman: length mismatch");
  if (x.size() < 3) throw DataError("spearman: need at least 3 pairs");
  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  const std::size_t n = x.size();
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = rx[i] - mx;
    double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("spearman: undefined correlation (constant input)");
  double rho = sxy / std::sqrt(sxx * syy);
  rho = std::clamp(rho, -1.0, 1.0);
  TestResult result{Method::Spearman, rho, 0.0, {n, n}};
  if (std::fabs(rho) >= 1.0 - 1e-15) {
    result.p_value = 0.0;
    return result;
  }
  double df = static_cast<double>(n) - 2.0;
  double t = rho * std::sqrt(df / (1.0 - rho * rho));
  result.p_value = clamp_prob(2.0 * student_t_sf(std::fabs(t), df));
  return result;
}

TestResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("mann_whitney: both samples must be non-empty");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  std::vector<double> pooled;
  pooled.reserve(n1 + n2);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<double> ranks = average_ranks(pooled);
  double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
  double u = r1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;

  // Tie correction over pooled tie-group sizes.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  std::size_t i = 0;
  const std::size_t n = n1 + n2;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    double t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  double nn = static_cast<double>(n);
  double var = (static_cast<double>(n1) * static_cast<double>(n2) / 12.0) *
               ((nn + 1.0) - tie_sum / (nn * (nn - 1.0)));
  if (var <= 0.0) throw DataError("mann_whitney: degenerate ranking (all values identical)");
  double mean = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  double diff = std::fabs(u - mean) - 0.5;
  if (diff < 0.0) diff = 0.0;
  double z = diff / std::sqrt(var);
  TestResult result{Method::MannWhitney, u, clamp_prob(2.0 * normal_sf(z)), {n1, n2}};
  return result;
}

TestResult g_test(const long long (&table)[2][2]) {
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      if (table[r][c] < 0) throw DataError("g_test: negative cell count");
  double row[2] = {static_cast<double>(table[0][0] + table[0][1]),
                   static_cast<double>(table[1][0] + table[1][1])};
  double col[2] = {static_cast<double>(table[0][0] + table[1][0]),
                   static_cast<double>(table[0][1] + table[1][1])};
  if (row[0] <= 0.0 || row[1] <= 0.0 || col[0] <= 0.0 || col[1] <= 0.0)
    throw DataError("g_test: degenerate table (zero margin)");
  double total = row[0] + row[1];
  double g = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      double observed = static_cast<double>(table[r][c]);
      if (observed <= 0.0) continue;  // O ln O -> 0 as O -> 0
      double expected = row[r] * col[c] / total;
      g += observed * std::log(observed / expected);
    }
  }
  g *= 2.0;
  if (g < 0.0) g = 0.0;
  TestResult result{Method::GTest, g, clamp_prob(chi2_sf(g, 1.0)),
                    {static_cast<std::size_t>(total), 0}};
  return result;
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("ks_two_sample: both samples must be non-empty");
  require_finite(a, "ks_two_sample");
  require_finite(b, "ks_two_sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t n1 = sa.size();
  const std::size_t n2 = sb.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n1 && j < n2) {
    double v = std::min(sa[i], sb[j]);
    while (i < n1 && sa[i] == v) ++i;
    while (j < n2 && sb[j] == v) ++j;
    double fa = static_cast<double>(i) / static_cast<double>(n1);
    double fb = static_cast<double>(j) / static_cast<double>(n2);
    d = std::max(d, std::fabs(fa - fb));
  }
  // Once one sample is exhausted the gap only shrinks back to 0 at the
  // remaining values' tail, so the scan above has already seen the sup.
  double ne = static_cast<double>(n1) * static_cast<double>(n2) /
              static_cast<double>(n1 + n2);
  double lambda = std::sqrt(ne) * d;
  TestResult result{Method::KsTwoSample, d, kolmogorov_sf(lambda), {n1, n2}};
  return result;
}

}  // namespace riskpipe::stats
