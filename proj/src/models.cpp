#include "riskpipe/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "riskpipe/csv.hpp"
#include "riskpipe/parallel.hpp"

namespace riskpipe::models {

P2pTransform transform_p2p(double p2p_rate) {
  if (!(p2p_rate >= 0.0)) throw DataError("transform_p2p: rate must be nonnegative");
  if (p2p_rate == 0.0) return {1.0, 0.0};
  return {0.0, std::log(p2p_rate)};
}

Design build_design(std::span<const riskvectors::RiskProfile> profiles) {
  Design design;
  design.column_names.assign(kRegressorNames.begin(), kRegressorNames.end());
  std::vector<const riskvectors::RiskProfile*> usable;
  for (const auto& p : profiles) {
    if (p.bot_rate > 0.0)
      usable.push_back(&p);
    else
      ++design.excluded;
  }
  if (usable.size() < 10)
    throw DataError("insufficient data: " + std::to_string(usable.size()) +
                    " usable rows (bot_rate > 0), need at least 10");
  const auto n = static_cast<Eigen::Index>(usable.size());
  design.x.resize(n, 7);
  design.y.resize(n);
  design.industries.reserve(usable.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = *usable[static_cast<std::size_t>(i)];
    P2pTransform t = transform_p2p(p.p2p_rate);
    design.x(i, 0) = t.t0;
    design.x(i, 1) = t.t_hat;
    design.x(i, 2) = p.tls_cfg_frac;
    design.x(i, 3) = p.tls_cert_frac;
    design.x(i, 4) = p.risky_frac;
    design.x(i, 5) = p.reasonable_frac;
    design.x(i, 6) = 1.0;
    design.y(i) = std::log(p.bot_rate);
    design.industries.push_back(p.industry);
  }
  return design;
}

RegressionFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::span<const std::string> names, double ci_level) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (static_cast<std::size_t>(k) != names.size())
    throw DataError("fit_ols: column/name count mismatch");
  if (n <= k) throw DataError("fit_ols: need more rows than regressors");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw DataError("fit_ols: ci_level must be in (0,1)");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(x);
  if (pivoted.rank() < k) {
    auto perm = pivoted.colsPermutation().indices();
    std::vector<std::string> dependent;
    for (Eigen::Index i = pivoted.rank(); i < k; ++i)
      dependent.push_back(names[static_cast<std::size_t>(perm(i))]);
    std::sort(dependent.begin(), dependent.end());
    std::string joined;
    for (const auto& name : dependent) {
      if (!joined.empty()) joined += ", ";
      joined += name;
    }
    throw DataError("rank-deficient design: collinear columns [" + joined + "]");
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  Eigen::VectorXd beta = qr.solve(y);
  Eigen::VectorXd residuals = y - x * beta;
  double rss = residuals.squaredNorm();
  // An exact fit leaves only rounding residue; snap it so sigma is 0 and the
  // AIC degenerate-likelihood check can fire.
  double y_scale = y.squaredNorm();
  if (rss <= 1e-20 * (y_scale > 0.0 ? y_scale : 1.0)) rss = 0.0;
  double df = static_cast<double>(n - k);
  double sigma2 = rss / df;
  double sigma = std::sqrt(sigma2);

  Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd xtx_inv = r_inv * r_inv.transpose();

  double mean_y = y.mean();
  double tss = (y.array() - mean_y).square().sum();
  double r2 = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
  r2 = std::clamp(r2, 0.0, 1.0);

  double quantile = stats::student_t_sf_inverse((1.0 - ci_level) / 2.0, df);

  RegressionFit fit;
  fit.ci_level = ci_level;
  fit.n = static_cast<std::size_t>(n);
  fit.k = static_cast<std::size_t>(k) + 1;  // + sigma
  fit.rss = rss;
  fit.sigma = sigma;
  fit.r2 = r2;
  fit.aic = rss > 0.0
                ? static_cast<double>(n) * std::log(rss / static_cast<double>(n)) +
                      2.0 * static_cast<double>(fit.k)
                : std::numeric_limits<double>::quiet_NaN();
  fit.coefficients.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    Coefficient c;
    c.name = names[static_cast<std::size_t>(j)];
    c.estimate = beta(j);
    c.std_error = sigma * std::sqrt(std::max(xtx_inv(j, j), 0.0));
    if (c.std_error > 0.0) {
      c.t = c.estimate / c.std_error;
      c.p = std::min(1.0, 2.0 * stats::student_t_sf(std::fabs(c.t), df));
      c.ci_low = c.estimate - quantile * c.std_error;
      c.ci_high = c.estimate + quantile * c.std_error;
    } else {
      // Exact fit: the estimate carries no sampling noise.
      c.t = c.estimate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() *
                                          (c.estimate > 0.0 ? 1.0 : -1.0);
      c.p = c.estimate == 0.0 ? 1.0 : 0.0;
      c.ci_low = c.ci_high = c.estimate;
    }
    fit.coefficients.push_back(std::move(c));
  }
  return fit;
}

double model_aic(const RegressionFit& fit) {
  if (fit.n == 0) throw DataError("model_aic: empty fit");
  if (!(fit.rss > 0.0)) throw DataError("model_aic: degenerate likelihood (RSS = 0)");
  return static_cast<double>(fit.n) * std::log(fit.rss / static_cast<double>(fit.n)) +
         2.0 * static_cast<double>(fit.k);
}

double effect_multiplier(double beta, double delta) {
  if (!std::isfinite(beta) || !std::isfinite(delta))
    throw DataError("effect_multiplier: non-finite input");
  return std::exp(beta * delta);
}

const char* to_token(Variant v) {
  switch (v) {
    case Variant::Pooled: return "pooled";
    case Variant::FixedEffects: return "fixed_effects";
    case Variant::Unpooled: return "unpooled";
  }
  return "?";
}

namespace {

// Usable = contributes a regression row.
std::map<std::string, std::size_t> usable_rows_by_industry(
    std::span<const riskvectors::RiskProfile> profiles) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : profiles)
    if (p.bot_rate > 0.0) ++counts[p.industry];
  return counts;
}

}  // namespace

VariantFit fit_variants(std::span<const riskvectors::RiskProfile> profiles, Variant variant,
                        double ci_level, std::size_t min_industry_rows) {
  if (min_industry_rows < 10) min_industry_rows = 10;  // build_design floor
  VariantFit out;
  out.variant = variant;

  if (variant == Variant::Pooled) {
    Design d = build_design(profiles);
    RegressionFit fit = fit_ols(d.x, d.y, d.column_names, ci_level);
    out.total_coefficients = fit.coefficients.size();
    out.total_k = fit.k;
    out.total_aic = model_aic(fit);
    out.combined = std::move(fit);
    return out;
  }

  auto counts = usable_rows_by_industry(profiles);
  std::vector<std::string> retained;
  for (const auto& [industry, n] : counts) {
    if (n >= min_industry_rows)
      retained.push_back(industry);
    else
      out.dropped_industries.push_back(industry);
  }
  if (retained.empty()) throw DataError("insufficient data: no industry has enough usable rows");

  if (variant == Variant::Unpooled) {
    std::vector<std::vector<riskvectors::RiskProfile>> groups(retained.size());
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < retained.size(); ++i) slot[retained[i]] = i;
    for (const auto& p : profiles) {
      auto it = slot.find(p.industry);
      if (it != slot.end()) groups[it->second].push_back(p);
    }
    out.per_industry.resize(retained.size());
    parallel_for(retained.size(), [&](std::size_t i) {
      Design d = build_design(groups[i]);
      out.per_industry[i] =
          IndustryFit{retained[i], fit_ols(d.x, d.y, d.column_names, ci_level)};
    });
    for (const auto& f : out.per_industry) {
      out.total_coefficients += f.fit.coefficients.size();
      out.total_k += f.fit.k;
      out.total_aic += model_aic(f.fit);
    }
    return out;
  }

  // Fixed effects: shared slopes, one indicator per industry except the
  // (lexicographically first) reference.
  std::set<std::string> keep(retained.begin(), retained.end());
  std::vector<riskvectors::RiskProfile> subset;
  for (const auto& p : profiles)
    if (keep.count(p.industry)) subset.push_back(p);
  Design d = build_design(subset);
  // retained.front() is the reference industry absorbed by the intercept.
  std::vector<std::string> dummies(retained.begin() + 1, retained.end());
  const auto n = d.x.rows();
  const auto base_cols = d.x.cols();  // 7, intercept last
  Eigen::MatrixXd x(n, base_cols + static_cast<Eigen::Index>(dummies.size()));
  x.leftCols(base_cols - 1) = d.x.leftCols(base_cols - 1);
  std::vector<std::string> names(d.column_names.begin(), d.column_names.end() - 1);
  for (std::size_t j = 0; j < dummies.size(); ++j) {
    auto col = base_cols - 1 + static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < n; ++i)
      x(i, col) = d.industries[static_cast<std::size_t>(i)] == dummies[j] ? 1.0 : 0.0;
    names.push_back("industry=" + dummies[j]);
  }
  x.col(x.cols() - 1).setOnes();
  names.push_back("intercept");
  RegressionFit fit = fit_ols(x, d.y, names, ci_level);
  out.total_coefficients = fit.coefficients.size();
  out.total_k = fit.k;
  out.total_aic = model_aic(fit);
  out.combined = std::move(fit);
  return out;
}

ModelComparison compare_models(std::span<const riskvectors::RiskProfile> profiles,
                               double ci_level, std::size_t min_industry_rows) {
  if (min_industry_rows < 10) min_industry_rows = 10;
  auto counts = usable_rows_by_industry(profiles);
  std::set<std::string> keep;
  ModelComparison cmp;
  for (const auto& [industry, n] : counts) {
    if (n >= min_industry_rows)
      keep.insert(industry);
    else
      cmp.dropped_industries.push_back(industry);
  }
  if (keep.empty()) throw DataError("insufficient data: no industry has enough usable rows");
  std::vector<riskvectors::RiskProfile> subset;
  for (const auto& p : profiles)
    if (keep.count(p.industry)) subset.push_back(p);

  std::vector<Variant> variants{Variant::Pooled};
  if (keep.size() >= 2) variants.push_back(Variant::FixedEffects);
  variants.push_back(Variant::Unpooled);

  for (Variant v : variants) {
    VariantFit fit = fit_variants(subset, v, ci_level, min_industry_rows);
    cmp.entries.push_back(ModelComparisonEntry{to_token(v), fit.total_coefficients,
                                               fit.total_k, fit.total_aic});
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cmp.entries.size(); ++i)
    if (cmp.entries[i].aic < cmp.entries[best].aic) best = i;
  cmp.selected = cmp.entries[best].name;
  return cmp;
}

namespace {

std::string rank_direction(const stats::TestResult& mww) {
  double mean = static_cast<double>(mww.n.n1) * static_cast<double>(mww.n.n2) / 2.0;
  if (mww.statistic > mean) return "bot_present_higher";
  if (mww.statistic < mean) return "bot_absent_higher";
  return "tied";
}

}  // namespace

PresenceAnalysis presence_analysis(std::span<const riskvectors::RiskProfile> profiles) {
  std::vector<const riskvectors::RiskProfile*> with_bots, without_bots;
  for (const auto& p : profiles)
    (p.bot_present ? with_bots : without_bots).push_back(&p);
  if (with_bots.empty() || without_bots.empty())
    throw DataError("presence_analysis: need both bot-present and bot-absent organizations");

  PresenceAnalysis out;
  for (const auto& p : profiles) {
    int r = p.bot_present ? 0 : 1;
    int c = p.p2p_present ? 0 : 1;
    ++out.presence_table[r][c];
  }
  out.presence_gtest =
      LabeledTest{"bot_present_x_p2p_present", stats::g_test(out.presence_table), ""};

  const std::pair<const char*, double riskvectors::RiskProfile::*> vectors[] = {
      {"p2p_rate", &riskvectors::RiskProfile::p2p_rate},
      {"tls_cfg_frac", &riskvectors::RiskProfile::tls_cfg_frac},
      {"tls_cert_frac", &riskvectors::RiskProfile::tls_cert_frac},
      {"risky_frac", &riskvectors::RiskProfile::risky_frac},
      {"reasonable_frac", &riskvectors::RiskProfile::reasonable_frac},
  };
  for (const auto& [label, member] : vectors) {
    std::vector<double> a, b;
    a.reserve(with_bots.size());
    b.reserve(without_bots.size());
    for (const auto* p : with_bots) a.push_back(p->*member);
    for (const auto* p : without_bots) b.push_back(p->*member);
    stats::TestResult res = stats::mann_whitney(a, b);
    out.rank_tests.push_back(LabeledTest{label, res, rank_direction(res)});
  }
  return out;
}

std::vector<CorrelationRow> correlation_table(
    std::span<const riskvectors::RiskProfile> profiles) {
  std::vector<const riskvectors::RiskProfile*> active;
  for (const auto& p : profiles)
    if (p.bot_rate > 0.0) active.push_back(&p);
  if (active.size() < 3)
    throw DataError("correlation_table: need at least 3 organizations with bot_rate > 0");
  std::vector<double> bot;
  bot.reserve(active.size());
  for (const auto* p : active) bot.push_back(p->bot_rate);

  const std::pair<const char*, double riskvectors::RiskProfile::*> vectors[] = {
      {"p2p_rate", &riskvectors::RiskProfile::p2p_rate},
      {"tls_cfg_frac", &riskvectors::RiskProfile::tls_cfg_frac},
      {"tls_cert_frac", &riskvectors::RiskProfile::tls_cert_frac},
      {"risky_frac", &riskvectors::RiskProfile::risky_frac},
      {"reasonable_frac", &riskvectors::RiskProfile::reasonable_frac},
  };
  std::vector<CorrelationRow> rows;
  for (const auto& [label, member] : vectors) {
    CorrelationRow row;
    row.label = label;
    std::vector<double> values;
    values.reserve(active.size());
    for (const auto* p : active) values.push_back(p->*member);
    try {
      stats::TestResult res = stats::spearman(bot, values);
      row.ok = true;
      row.rho = res.statistic;
      row.p = res.p_value;
    } catch (const DataError& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

KsMatrix industry_ks_matrix(std::span<const riskvectors::RiskProfile> profiles, double alpha,
                            std::size_t min_orgs) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("industry_ks_matrix: alpha must be in (0,1)");
  std::map<std::string, std::vector<double>> by_industry;
  for (const auto& p : profiles) by_industry[p.industry].push_back(p.bot_rate);

  KsMatrix out;
  out.alpha = alpha;
  std::vector<const std::pair<const std::string, std::vector<double>>*> retained;
  for (const auto& entry : by_industry) {
    if (entry.second.size() >= min_orgs)
      retained.push_back(&entry);
    else
      out.skipped_industries.push_back(entry.first);
  }
  if (retained.size() < 2) return out;  // empty matrix

  std::vector<std::pair<std::size_t, std::size_t>> index_pairs;
  for (std::size_t i = 0; i < retained.size(); ++i)
    for (std::size_t j = i + 1; j < retained.size(); ++j) index_pairs.push_back({i, j});
  out.pairs.resize(index_pairs.size());
  parallel_for(index_pairs.size(), [&](std::size_t k) {
    auto [i, j] = index_pairs[k];
    stats::TestResult res = stats::ks_two_sample(retained[i]->second, retained[j]->second);
    out.pairs[k] = KsPair{retained[i]->first, retained[j]->first, res.statistic, res.p_value,
                          res.p_value < alpha};
  });
  std::size_t significant = 0;
  for (const auto& pair : out.pairs)
    if (pair.significant) ++significant;
  out.fraction_significant =
      static_cast<double>(significant) / static_cast<double>(out.pairs.size());
  return out;
}

BreachAssociation breach_association(std::span<const riskvectors::RiskProfile> profiles,
                                     std::span<const ingest::BreachEvent> breaches) {
  std::set<std::string> profile_ids;
  for (const auto& p : profiles) profile_ids.insert(p.org_id);
  std::set<std::string> breached, unknown;
  for (const auto& b : breaches) {
    if (profile_ids.count(b.org_id))
      breached.insert(b.org_id);
    else
      unknown.insert(b.org_id);
  }

  BreachAssociation out;
  out.unknown_breach_orgs = unknown.size();
  out.bot.factor = "bot_present";
  out.p2p.factor = "p2p_present";
  for (const auto& p : profiles) {
    int r = breached.count(p.org_id) ? 0 : 1;
    ++out.bot.table[r][p.bot_present ? 0 : 1];
    ++out.p2p.table[r][p.p2p_present ? 0 : 1];
  }
  out.bot.result = stats::g_test(out.bot.table);
  out.p2p.result = stats::g_test(out.p2p.table);
  return out;
}

namespace {

void write_coefficient_row(std::ostream& out, const Coefficient& c, const std::string& prefix) {
  out << prefix << csv::join_row({c.name}) << ',' << format_double(c.estimate) << ','
      << format_double(c.std_error) << ',' << format_double(c.t) << ',' << format_double(c.p)
      << ',' << format_double(c.ci_low) << ',' << format_double(c.ci_high) << '\n';
}

}  // namespace

void write_regression_csv(const RegressionFit& fit, std::ostream& out) {
  out << "regressor,estimate,stderr,t,p,ci_low,ci_high\n";
  for (const auto& c : fit.coefficients) write_coefficient_row(out, c, "");
}

void write_unpooled_csv(std::span<const IndustryFit> fits, std::ostream& out) {
  out << "industry,regressor,estimate,stderr,t,p,ci_low,ci_high\n";
  for (const auto& f : fits)
    for (const auto& c : f.fit.coefficients)
      write_coefficient_row(out, c, csv::join_row({f.industry}) + ",");
}

void write_model_comparison_csv(const ModelComparison& cmp, std::ostream& out) {
  out << "model,n_coefficients,k_total,aic,selected\n";
  for (const auto& e : cmp.entries)
    out << e.name << ',' << e.n_coefficients << ',' << e.k_total << ','
        << format_double(e.aic) << ',' << (e.name == cmp.selected ? '1' : '0') << '\n';
}

void write_correlations_csv(std::span<const CorrelationRow> rows, std::ostream& out) {
  out << "variable,rho,p,error\n";
  for (const auto& r : rows) {
    if (r.ok)
      out << r.label << ',' << format_double(r.rho) << ',' << format_double(r.p) << ",\n";
    else
      out << r.label << ",,," << csv::join_row({r.error}) << '\n';
  }
}

void write_presence_csv(const PresenceAnalysis& analysis, std::ostream& out) {
  out << "test,variable,statistic,p,direction,n1,n2\n";
  const auto& g = analysis.presence_gtest;
  out << "g_test," << g.label << ',' << format_double(g.result.statistic) << ','
      << format_double(g.result.p_value) << ",," << g.result.n.n1 << ",0\n";
  for (const auto& t : analysis.rank_tests)
    out << "mann_whitney," << t.label << ',' << format_double(t.result.statistic) << ','
        << format_double(t.result.p_value) << ',' << t.direction << ',' << t.result.n.n1
        << ',' << t.result.n.n2 << '\n';
}

void write_ks_matrix_csv(const KsMatrix& matrix, std::ostream& out) {
  out << "industry_a,industry_b,d,p,significant\n";
  for (const auto& pair : matrix.pairs)
    out << csv::join_row({pair.industry_a, pair.industry_b}) << ',' << format_double(pair.d)
        << ',' << format_double(pair.p) << ',' << (pair.significant ? '1' : '0') << '\n';
}

void write_breach_csv(const BreachAssociation& assoc, std::ostream& out) {
  out << "factor,breached_with,breached_without,unbreached_with,unbreached_without,g,p\n";
  for (const BreachTest* t : {&assoc.bot, &assoc.p2p})
    out << t->factor << ',' << t->table[0][0] << ',' << t->table[0][1] << ',' << t->table[1][0]
        << ',' << t->table[1][1] << ',' << format_double(t->result.statistic) << ','
        << format_double(t->result.p_value) << '\n';
}

}  // namespace riskpipe::models
