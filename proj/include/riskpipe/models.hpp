#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskpipe/ingest.hpp"
#include "riskpipe/riskvectors.hpp"
#include "riskpipe/stats.hpp"

namespace riskpipe::models {

// Zero-inflated log transform of the peer-to-peer rate: a presence indicator
// plus the log of the rate when positive.
struct P2pTransform {
  double t0 = 0.0;   // 1 when the rate is zero
  double t_hat = 0.0;  // ln(rate) when positive, else 0
};
P2pTransform transform_p2p(double p2p_rate);

inline constexpr std::array<const char*, 7> kRegressorNames{
    "t0", "t_hat", "tls_cfg_frac", "tls_cert_frac", "risky_frac", "reasonable_frac",
    "intercept"};

struct Design {
  Eigen::MatrixXd x;  // columns in kRegressorNames order, intercept last
  Eigen::VectorXd y;  // ln(bot_rate)
  std::vector<std::string> column_names;
  std::vector<std::string> industries;  // per row
  std::size_t excluded = 0;             // profiles dropped for bot_rate == 0
};

// One row per profile with bot_rate > 0; throws "insufficient data" below 10
// usable rows.
Design build_design(std::span<const riskvectors::RiskProfile> profiles);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t = 0.0;
  double p = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct RegressionFit {
  std::vector<Coefficient> coefficients;
  double ci_level = 0.98;
  double r2 = 0.0;
  double sigma = 0.0;  // residual standard deviation
  std::size_t n = 0;
  std::size_t k = 0;  // coefficients + 1 (sigma), the AIC parameter count
  double rss = 0.0;
  double aic = 0.0;  // NaN when rss == 0
};

RegressionFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::span<const std::string> names, double ci_level = 0.98);

// n ln(RSS/n) + 2k; rejects RSS == 0 as a degenerate likelihood.
double model_aic(const RegressionFit& fit);

double effect_multiplier(double beta, double delta);

enum class Variant { Pooled, FixedEffects, Unpooled };
const char* to_token(Variant v);

struct IndustryFit {
  std::string industry;
  RegressionFit fit;
};

struct VariantFit {
  Variant variant = Variant::Pooled;
  std::optional<RegressionFit> combined;  // Pooled / FixedEffects
  std::vector<IndustryFit> per_industry;  // Unpooled, sorted by industry
  std::vector<std::string> dropped_industries;
  std::size_t total_coefficients = 0;
  std::size_t total_k = 0;  // includes one sigma per fit
  double total_aic = 0.0;
};

// Industries with fewer than min_industry_rows usable rows are dropped from
// the per-industry variants (never from Pooled).
VariantFit fit_variants(std::span<const riskvectors::RiskProfile> profiles, Variant variant,
                        double ci_level = 0.98, std::size_t min_industry_rows = 10);

struct ModelComparisonEntry {
  std::string name;
  std::size_t n_coefficients = 0;
  std::size_t k_total = 0;
  double aic = 0.0;
};

struct ModelComparison {
  std::vector<ModelComparisonEntry> entries;
  std::string selected;
  std::vector<std::string> dropped_industries;
};

// Fits all variants on the same rows (industries below the minimum are
// dropped for every variant so the AIC totals stay comparable) and selects
// the minimum-AIC variant; exact ties prefer the simpler model.
ModelComparison compare_models(std::span<const riskvectors::RiskProfile> profiles,
                               double ci_level = 0.98, std::size_t min_industry_rows = 10);

struct LabeledTest {
  std::string label;
  stats::TestResult result;
  // Which group ranks higher under stochastic ordering; no median claim.
  std::string direction;
};

struct PresenceAnalysis {
  LabeledTest presence_gtest;  // bot_present x p2p_present
  long long presence_table[2][2] = {{0, 0}, {0, 0}};
  std::vector<LabeledTest> rank_tests;  // p2p_rate, T_CF, T_CT, S_Ri, S_Re
};

PresenceAnalysis presence_analysis(std::span<const riskvectors::RiskProfile> profiles);

struct CorrelationRow {
  std::string label;
  bool ok = false;
  double rho = 0.0;
  double p = 1.0;
  std::string error;
};

// Spearman of bot_rate against each risk vector over orgs with bot_rate > 0.
std::vector<CorrelationRow> correlation_table(std::span<const riskvectors::RiskProfile> profiles);

struct KsPair {
  std::string industry_a;
  std::string industry_b;
  double d = 0.0;
  double p = 1.0;
  bool significant = false;
};

struct KsMatrix {
  std::vector<KsPair> pairs;
  double alpha = 0.01;
  double fraction_significant = 0.0;
  std::vector<std::string> skipped_industries;
};

KsMatrix industry_ks_matrix(std::span<const riskvectors::RiskProfile> profiles, double alpha,
                            std::size_t min_orgs = 5);

struct BreachTest {
  std::string factor;  // "bot_present" / "p2p_present"
  long long table[2][2] = {{0, 0}, {0, 0}};  // rows breached yes/no, cols factor yes/no
  stats::TestResult result;
};

struct BreachAssociation {
  BreachTest bot;
  BreachTest p2p;
  std::size_t unknown_breach_orgs = 0;
};

BreachAssociation breach_association(std::span<const riskvectors::RiskProfile> profiles,
                                     std::span<const ingest::BreachEvent> breaches);

// Analysis CSV surfaces.
void write_regression_csv(const RegressionFit& fit, std::ostream& out);
void write_unpooled_csv(std::span<const IndustryFit> fits, std::ostream& out);
void write_model_comparison_csv(const ModelComparison& cmp, std::ostream& out);
void write_correlations_csv(std::span<const CorrelationRow> rows, std::ostream& out);
void write_presence_csv(const PresenceAnalysis& analysis, std::ostream& out);
void write_ks_matrix_csv(const KsMatrix& matrix, std::ostream& out);
void write_breach_csv(const BreachAssociation& assoc, std::ostream& out);

}  // namespace riskpipe::models
