#pragma once

#include <span>
#include <string>
#include <vector>

#include "riskpipe/csv.hpp"
#include "riskpipe/manifest.hpp"
#include "riskpipe/riskvectors.hpp"

namespace riskpipe::report {

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct DistributionSummary {
  std::vector<HistogramBin> bins;  // equal width; on the log10 axis when log_scale
  std::size_t zero_count = 0;      // zeros held out of the bins when log_scale
  std::size_t n = 0;
  bool log_scale = false;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // q1 - 1.5 IQR
  double whisker_high = 0.0;  // q3 + 1.5 IQR
};

// Quartiles use linear interpolation over all values; histogram covers the
// positive values only when log_scale is set.
DistributionSummary summarize_distribution(std::span<const double> values, bool log_scale,
                                           std::size_t bins);

struct ReportOptions {
  std::size_t bins = 50;
  double alpha = 0.01;
  // Gaussian KDE bandwidth for the scatter density column, in standardized
  // coordinates; 0 selects Scott's rule n^(-1/6).
  double kde_bandwidth = 0.0;
};

struct ReportInputs {
  std::span<const riskvectors::RiskProfile> profiles;
  const csv::Table* regression_pooled = nullptr;    // required
  const csv::Table* regression_unpooled = nullptr;  // required
  const csv::Table* breach_tests = nullptr;         // optional
};

// Emits the per-figure data files into `out` and returns the file names.
std::vector<std::string> write_figures(const ReportInputs& inputs, const ReportOptions& options,
                                       manifest::OutputDir& out);

}  // namespace riskpipe::report
