#include "riskpipe/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "riskpipe/common.hpp"
#include "riskpipe/parallel.hpp"

namespace riskpipe::report {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Type-7 (linear interpolation) quantile on a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted[0];
  double pos = p * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::size_t column_index(const csv::Table& table, const std::string& name,
                         const std::string& what) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return i;
  throw DataError(what + ": missing column '" + name + "'");
}

double number_at(const std::vector<std::string>& row, std::size_t idx, const std::string& what) {
  double v;
  if (idx >= row.size() || !try_parse_double(row[idx], v))
    throw DataError(what + ": bad numeric field");
  return v;
}

}  // namespace

DistributionSummary summarize_distribution(std::span<const double> values, bool log_scale,
                                           std::size_t bins) {
  if (values.empty()) throw DataError("summarize_distribution: empty input");
  if (bins == 0) throw DataError("summarize_distribution: need at least one bin");
  DistributionSummary summary;
  summary.n = values.size();
  summary.log_scale = log_scale;

  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw DataError("summarize_distribution: non-finite value");
  std::sort(sorted.begin(), sorted.end());
  summary.q1 = quantile_sorted(sorted, 0.25);
  summary.median = quantile_sorted(sorted, 0.50);
  summary.q3 = quantile_sorted(sorted, 0.75);
  double iqr = summary.q3 - summary.q1;
  summary.whisker_low = summary.q1 - 1.5 * iqr;
  summary.whisker_high = summary.q3 + 1.5 * iqr;

  std::vector<double> axis;  // values in histogram coordinates
  if (log_scale) {
    for (double v : sorted) {
      if (v < 0.0) throw DataError("summarize_distribution: negative value on log scale");
      if (v == 0.0)
        ++summary.zero_count;
      else
        axis.push_back(std::log10(v));
    }
  } else {
    axis = sorted;
  }
  if (axis.empty()) return summary;

  double lo = axis.front();
  double hi = axis.back();
  auto to_value = [log_scale](double edge) { return log_scale ? std::pow(10.0, edge) : edge; };
  if (lo == hi) {
    summary.bins.push_back(HistogramBin{to_value(lo), to_value(hi), axis.size()});
    return summary;
  }
  double width = (hi - lo) / static_cast<double>(bins);
  summary.bins.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    summary.bins[b].lo = to_value(lo + width * static_cast<double>(b));
    summary.bins[b].hi = to_value(lo + width * static_cast<double>(b + 1));
  }
  summary.bins.back().hi = to_value(hi);
  for (double v : axis) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= bins) b = bins - 1;
    ++summary.bins[b].count;
  }
  return summary;
}

namespace {

struct Variable {
  const char* name;
  double riskvectors::RiskProfile::* member;
  bool log_scale;
};

constexpr Variable kHistogramVariables[] = {
    {"bot_rate", &riskvectors::RiskProfile::bot_rate, true},
    {"p2p_rate", &riskvectors::RiskProfile::p2p_rate, true},
    {"tls_cfg_frac", &riskvectors::RiskProfile::tls_cfg_frac, false},
    {"tls_cert_frac", &riskvectors::RiskProfile::tls_cert_frac, false},
    {"risky_frac", &riskvectors::RiskProfile::risky_frac, false},
    {"reasonable_frac", &riskvectors::RiskProfile::reasonable_frac, false},
};

constexpr Variable kPresenceVariables[] = {
    {"p2p_rate", &riskvectors::RiskProfile::p2p_rate, false},
    {"tls_cfg_frac", &riskvectors::RiskProfile::tls_cfg_frac, false},
    {"tls_cert_frac", &riskvectors::RiskProfile::tls_cert_frac, false},
    {"risky_frac", &riskvectors::RiskProfile::risky_frac, false},
    {"reasonable_frac", &riskvectors::RiskProfile::reasonable_frac, false},
};

void write_histograms(const ReportInputs& inputs, const ReportOptions& options,
                      manifest::OutputDir& out, std::vector<std::string>& files) {
  std::ostringstream summary_rows;
  for (const Variable& var : kHistogramVariables) {
    std::vector<double> values;
    values.reserve(inputs.profiles.size());
    for (const auto& p : inputs.profiles) values.push_back(p.*(var.member));
    DistributionSummary s = summarize_distribution(values, var.log_scale, options.bins);
    std::string name = std::string("fig_hist_") + var.name + ".csv";
    out.write_file(name, [&](std::ostream& os) {
      os << "bin_low,bin_high,count\n";
      for (const auto& bin : s.bins)
        os << format_double(bin.lo) << ',' << format_double(bin.hi) << ',' << bin.count << '\n';
    });
    files.push_back(name);
    summary_rows << var.name << ',' << s.n << ',' << s.zero_count << ','
                 << format_double(s.q1) << ',' << format_double(s.median) << ','
                 << format_double(s.q3) << ',' << format_double(s.whisker_low) << ','
                 << format_double(s.whisker_high) << ',' << (s.log_scale ? '1' : '0') << '\n';
  }
  out.write_file("fig_hist_summary.csv", [&](std::ostream& os) {
    os << "variable,n,zero_count,q1,median,q3,whisker_low,whisker_high,log_scale\n"
       << summary_rows.str();
  });
  files.push_back("fig_hist_summary.csv");
}

void write_presence_figures(const ReportInputs& inputs, manifest::OutputDir& out,
                            std::vector<std::string>& files) {
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};  // [bot][p2p]
  for (const auto& p : inputs.profiles)
    ++counts[p.bot_present ? 0 : 1][p.p2p_present ? 0 : 1];
  out.write_file("fig_presence_counts.csv", [&](std::ostream& os) {
    os << "group,p2p_present,count\n";
    os << "with_bots,1," << counts[0][0] << '\n';
    os << "with_bots,0," << counts[0][1] << '\n';
    os << "without_bots,1," << counts[1][0] << '\n';
    os << "without_bots,0," << counts[1][1] << '\n';
  });
  files.push_back("fig_presence_counts.csv");

  for (const Variable& var : kPresenceVariables) {
    std::string name = std::string("fig_presence_") + var.name + ".csv";
    out.write_file(name, [&](std::ostream& os) {
      os << "group,n,q1,median,q3,whisker_low,whisker_high\n";
      const std::pair<const char*, bool> groups[] = {{"with_bots", true},
                                                     {"without_bots", false}};
      for (const auto& [label, want_bots] : groups) {
        std::vector<double> values;
        for (const auto& p : inputs.profiles)
          if (p.bot_present == want_bots) values.push_back(p.*(var.member));
        if (values.empty()) {
          os << label << ",0,,,,,\n";
          continue;
        }
        DistributionSummary s = summarize_distribution(values, false, 1);
        os << label << ',' << s.n << ',' << format_double(s.q1) << ','
           << format_double(s.median) << ',' << format_double(s.q3) << ','
           << format_double(s.whisker_low) << ',' << format_double(s.whisker_high) << '\n';
      }
    });
    files.push_back(name);
  }
}

void write_scatter(const ReportInputs& inputs, const ReportOptions& options,
                   manifest::OutputDir& out, std::vector<std::string>& files) {
  std::vector<const riskvectors::RiskProfile*> active;
  for (const auto& p : inputs.profiles)
    if (p.bot_rate > 0.0) active.push_back(&p);

  // Per-panel Gaussian KDE in standardized (risk vector, log10 bot rate)
  // coordinates; rows outside a panel's support carry density 0.
  auto panel_density = [&](double riskvectors::RiskProfile::* member, bool log_x) {
    std::vector<std::size_t> rows;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < active.size(); ++i) {
      double x = active[i]->*member;
      if (log_x) {
        if (x <= 0.0) continue;
        x = std::log10(x);
      }
      rows.push_back(i);
      xs.push_back(x);
      ys.push_back(std::log10(active[i]->bot_rate));
    }
    std::vector<double> density(active.size(), 0.0);
    if (rows.empty()) return density;
    auto n = static_cast<double>(rows.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      mx += xs[k];
      my += ys[k];
    }
    mx /= n;
    my /= n;
    double sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      sx += (xs[k] - mx) * (xs[k] - mx);
      sy += (ys[k] - my) * (ys[k] - my);
    }
    sx = std::sqrt(sx / n);
    sy = std::sqrt(sy / n);
    if (sx <= 0.0) sx = 1.0;
    if (sy <= 0.0) sy = 1.0;
    double h = options.kde_bandwidth > 0.0 ? options.kde_bandwidth
                                           : std::pow(n, -1.0 / 6.0);  // Scott's rule
    double norm = 1.0 / (n * kTwoPi * h * h * sx * sy);
    parallel_for(rows.size(), [&](std::size_t k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < rows.size(); ++j) {
        double du = (xs[k] - xs[j]) / (h * sx);
        double dv = (ys[k] - ys[j]) / (h * sy);
        acc += std::exp(-0.5 * (du * du + dv * dv));
      }
      density[rows[k]] = acc * norm;
    });
    return density;
  };

  auto d_p2p = panel_density(&riskvectors::RiskProfile::p2p_rate, true);
  auto d_cfg = panel_density(&riskvectors::RiskProfile::tls_cfg_frac, false);
  auto d_cert = panel_density(&riskvectors::RiskProfile::tls_cert_frac, false);
  auto d_risky = panel_density(&riskvectors::RiskProfile::risky_frac, false);
  auto d_reas = panel_density(&riskvectors::RiskProfile::reasonable_frac, false);

  out.write_file("fig_scatter.csv", [&](std::ostream& os) {
    os << "org_id,bot_rate,p2p_rate,tls_cfg_frac,tls_cert_frac,risky_frac,reasonable_frac,"
          "density_p2p,density_tls_cfg,density_tls_cert,density_risky,density_reasonable\n";
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto& p = *active[i];
      os << csv::join_row({p.org_id}) << ',' << format_double(p.bot_rate) << ','
         << format_double(p.p2p_rate) << ',' << format_double(p.tls_cfg_frac) << ','
         << format_double(p.tls_cert_frac) << ',' << format_double(p.risky_frac) << ','
         << format_double(p.reasonable_frac) << ',' << format_double(d_p2p[i]) << ','
         << format_double(d_cfg[i]) << ',' << format_double(d_cert[i]) << ','
         << format_double(d_risky[i]) << ',' << format_double(d_reas[i]) << '\n';
    }
  });
  files.push_back("fig_scatter.csv");
}

void write_coefficient_figure(const csv::Table& table, const char* file, bool with_industry,
                              double alpha, manifest::OutputDir& out,
                              std::vector<std::string>& files) {
  const std::string what = file;
  std::size_t regressor = column_index(table, "regressor", what);
  std::size_t estimate = column_index(table, "estimate", what);
  std::size_t ci_low = column_index(table, "ci_low", what);
  std::size_t ci_high = column_index(table, "ci_high", what);
  std::size_t p_col = column_index(table, "p", what);
  std::size_t industry = with_industry ? column_index(table, "industry", what) : 0;

  out.write_file(file, [&](std::ostream& os) {
    if (with_industry)
      os << "industry,regressor,estimate,ci_low,ci_high,p,significant\n";
    else
      os << "regressor,estimate,ci_low,ci_high,p,significant\n";
    for (const auto& row : table.rows) {
      double p = number_at(row, p_col, what);
      std::string lead;
      if (with_industry) lead = csv::join_row({row[industry]}) + ",";
      os << lead << csv::join_row({row[regressor]}) << ','
         << format_double(number_at(row, estimate, what)) << ','
         << format_double(number_at(row, ci_low, what)) << ','
         << format_double(number_at(row, ci_high, what)) << ',' << format_double(p) << ','
         << (p < alpha ? '1' : '0') << '\n';
    }
  });
  files.push_back(file);
}

void write_industry_bot(const ReportInputs& inputs, manifest::OutputDir& out,
                        std::vector<std::string>& files) {
  std::map<std::string, std::vector<double>> by_industry;
  for (const auto& p : inputs.profiles) by_industry[p.industry].push_back(p.bot_rate);
  out.write_file("fig_industry_bot.csv", [&](std::ostream& os) {
    os << "industry,n_orgs,n_bot_positive,zero_share,q1,median,q3,whisker_low,whisker_high\n";
    for (const auto& [industry, rates] : by_industry) {
      std::vector<double> positive;
      for (double r : rates)
        if (r > 0.0) positive.push_back(r);
      double zero_share = 1.0 - static_cast<double>(positive.size()) /
                                    static_cast<double>(rates.size());
      os << csv::join_row({industry}) << ',' << rates.size() << ',' << positive.size() << ','
         << format_double(zero_share);
      if (positive.empty()) {
        os << ",,,,,\n";
        continue;
      }
      DistributionSummary s = summarize_distribution(positive, false, 1);
      os << ',' << format_double(s.q1) << ',' << format_double(s.median) << ','
         << format_double(s.q3) << ',' << format_double(s.whisker_low) << ','
         << format_double(s.whisker_high) << '\n';
    }
  });
  files.push_back("fig_industry_bot.csv");
}

void write_breach_figure(const csv::Table& table, manifest::OutputDir& out,
                         std::vector<std::string>& files) {
  const std::string what = "fig_breach.csv";
  std::size_t factor = column_index(table, "factor", what);
  std::size_t bw = column_index(table, "breached_with", what);
  std::size_t bwo = column_index(table, "breached_without", what);
  std::size_t uw = column_index(table, "unbreached_with", what);
  std::size_t uwo = column_index(table, "unbreached_without", what);
  std::size_t g = column_index(table, "g", what);
  std::size_t p = column_index(table, "p", what);

  out.write_file("fig_breach.csv", [&](std::ostream& os) {
    os << "factor,group,with_factor,without_factor,share_with_factor,g,p\n";
    for (const auto& row : table.rows) {
      double breached_with = number_at(row, bw, what);
      double breached_without = number_at(row, bwo, what);
      double unbreached_with = number_at(row, uw, what);
      double unbreached_without = number_at(row, uwo, what);
      double g_val = number_at(row, g, what);
      double p_val = number_at(row, p, what);
      const struct {
        const char* group;
        double with_factor;
        double without_factor;
      } groups[] = {{"breached", breached_with, breached_without},
                    {"unbreached", unbreached_with, unbreached_without}};
      for (const auto& grp : groups) {
        double total = grp.with_factor + grp.without_factor;
        double share = total > 0.0 ? grp.with_factor / total : 0.0;
        os << csv::join_row({row[factor]}) << ',' << grp.group << ','
           << format_double(grp.with_factor) << ',' << format_double(grp.without_factor) << ','
           << format_double(share) << ',' << format_double(g_val) << ','
           << format_double(p_val) << '\n';
      }
    }
  });
  files.push_back("fig_breach.csv");
}

}  // namespace

std::vector<std::string> write_figures(const ReportInputs& inputs, const ReportOptions& options,
                                       manifest::OutputDir& out) {
  if (inputs.profiles.empty()) throw DataError("report: no profiles");
  if (!inputs.regression_pooled || !inputs.regression_unpooled)
    throw DataError("report: missing regression tables");
  std::vector<std::string> files;
  write_histograms(inputs, options, out, files);
  write_presence_figures(inputs, out, files);
  write_scatter(inputs, options, out, files);
  write_coefficient_figure(*inputs.regression_pooled, "fig_coeffs.csv", false, options.alpha,
                           out, files);
  write_industry_bot(inputs, out, files);
  write_coefficient_figure(*inputs.regression_unpooled, "fig_unpooled.csv", true, options.alpha,
                           out, files);
  if (inputs.breach_tests) write_breach_figure(*inputs.breach_tests, out, files);
  return files;
}

}  // namespace riskpipe::report
