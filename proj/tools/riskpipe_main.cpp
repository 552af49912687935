// riskpipe: external-measurement security pipeline.
//
// Subcommands chain into each other through CSV files:
//   synth     generate a seeded synthetic dataset (profiles or raw events)
//   aggregate turn event files into per-organization risk profiles
//   analyze   fit the regression models and association tests on profiles
//   breach    test breach events against bot / p2p presence
//   report    emit per-figure data files from an analysis directory
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "riskpipe/common.hpp"
#include "riskpipe/csv.hpp"
#include "riskpipe/ingest.hpp"
#include "riskpipe/manifest.hpp"
#include "riskpipe/models.hpp"
#include "riskpipe/orgmap.hpp"
#include "riskpipe/report.hpp"
#include "riskpipe/riskvectors.hpp"
#include "riskpipe/synth.hpp"

namespace {

using namespace riskpipe;

std::vector<YearMonth> parse_months(const std::string& spec) {
  std::vector<YearMonth> months;
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    YearMonth from = parse_year_month(spec.substr(0, colon));
    YearMonth to = parse_year_month(spec.substr(colon + 1));
    if (to < from) throw DataError("months range '" + spec + "' runs backwards");
    YearMonth cur = from;
    while (true) {
      months.push_back(cur);
      if (cur == to) break;
      if (++cur.month > 12) {
        cur.month = 1;
        ++cur.year;
      }
    }
    return months;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) months.push_back(parse_year_month(item));
  if (months.empty()) throw DataError("empty months list '" + spec + "'");
  return months;
}

void add_input(manifest::RunManifest& m, const std::string& path) {
  m.inputs.emplace_back(path, manifest::digest_of_file(path));
}

struct SynthArgs {
  std::size_t orgs = 1000;
  std::size_t industries = 22;
  std::uint64_t seed = 1;
  std::string mode = "profiles";
  std::string out;
  double spread = 0.0;
  double sigma = 1.0;
};

int run_synth(const SynthArgs& args) {
  synth::SynthConfig config;
  config.n_orgs = args.orgs;
  config.n_industries = args.industries;
  config.seed = args.seed;
  config.sigma = args.sigma;
  config.industry_coefficient_spread = args.spread;
  synth::Mode mode;
  if (args.mode == "profiles")
    mode = synth::Mode::Profiles;
  else if (args.mode == "events")
    mode = synth::Mode::Events;
  else
    throw DataError("unknown synth mode '" + args.mode + "' (profiles|events)");

  synth::Dataset data = synth::generate_dataset(config, mode);

  manifest::OutputDir out(args.out);
  out.write_file("ground_truth.csv",
                 [&](std::ostream& os) { synth::write_ground_truth(data.truth, os); });
  if (mode == synth::Mode::Profiles) {
    out.write_file("profiles.csv",
                   [&](std::ostream& os) { riskvectors::write_profiles(data.profiles, os); });
  } else {
    out.write_file("truth_profiles.csv",
                   [&](std::ostream& os) { riskvectors::write_profiles(data.profiles, os); });
    out.write_file("orgs.csv", [&](std::ostream& os) {
      os << "org_id,name,industry,employees\n";
      for (const auto& org : data.orgs)
        os << csv::join_row({org.org_id, org.name, org.industry}) << ',' << org.employees
           << '\n';
    });
    out.write_file("ipmap.csv", [&](std::ostream& os) {
      os << "org_id,cidr\n";
      for (const auto& range : data.ranges)
        os << csv::join_row({range.org_id}) << ',' << format_cidr(range.cidr) << '\n';
    });
    out.write_file("tls.csv", [&](std::ostream& os) { ingest::write_tls(data.tls, os); });
    out.write_file("services.csv",
                   [&](std::ostream& os) { ingest::write_services(data.services, os); });
    out.write_file("seeders.csv",
                   [&](std::ostream& os) { ingest::write_seeders(data.seeders, os); });
    out.write_file("infections.csv",
                   [&](std::ostream& os) { ingest::write_infections(data.infections, os); });
  }

  manifest::RunManifest m;
  m.command = "synth";
  m.parameters["orgs"] = std::to_string(args.orgs);
  m.parameters["industries"] = std::to_string(args.industries);
  m.parameters["seed"] = std::to_string(args.seed);
  m.parameters["mode"] = args.mode;
  m.parameters["sigma"] = format_double(args.sigma);
  m.parameters["spread"] = format_double(args.spread);
  out.finalize(m);
  return 0;
}

struct AggregateArgs {
  std::string orgs_file, ipmap, tls, services, seeders, infections;
  std::string months = "2015-01:2015-12";
  std::string out;
};

int run_aggregate(const AggregateArgs& args) {
  std::vector<YearMonth> months = parse_months(args.months);
  orgmap::Registry registry = orgmap::load_registry_file(args.orgs_file);
  std::vector<orgmap::IpRange> ranges = orgmap::load_ipmap_file(args.ipmap);
  orgmap::IpIndex index = orgmap::IpIndex::build(ranges, registry);

  auto tls = ingest::parse_tls_file(args.tls);
  auto services = ingest::parse_services_file(args.services);
  auto seeders = ingest::parse_seeders_file(args.seeders);
  auto infections = ingest::parse_infections_file(args.infections);

  riskvectors::AggregateInputs inputs{tls.records, services.records, seeders.records,
                                      infections.records};
  riskvectors::AggregateDiagnostics diag;
  std::vector<riskvectors::RiskProfile> profiles =
      riskvectors::aggregate_profiles(inputs, registry, index, months, &diag);

  manifest::OutputDir out(args.out);
  out.write_file("profiles.csv",
                 [&](std::ostream& os) { riskvectors::write_profiles(profiles, os); });

  manifest::RunManifest m;
  m.command = "aggregate";
  for (const auto& path :
       {args.orgs_file, args.ipmap, args.tls, args.services, args.seeders, args.infections})
    add_input(m, path);
  m.parameters["months"] = args.months;
  auto note_skips = [&m](const char* what, const ingest::ParseDiagnostics& d) {
    if (d.skipped > 0)
      m.notes.push_back(std::string(what) + ": skipped " + std::to_string(d.skipped) + " of " +
                        std::to_string(d.total_rows) + " rows");
  };
  note_skips("tls", tls.diag);
  note_skips("services", services.diag);
  note_skips("seeders", seeders.diag);
  note_skips("infections", infections.diag);
  m.notes.push_back("unattributed: infections=" + std::to_string(diag.unattributed_infections) +
                    " seeders=" + std::to_string(diag.unattributed_seeders) +
                    " tls=" + std::to_string(diag.unattributed_tls) +
                    " services=" + std::to_string(diag.unattributed_services));
  m.notes.push_back(
      "out_of_window: infections=" + std::to_string(diag.out_of_window_infections) +
      " seeders=" + std::to_string(diag.out_of_window_seeders) +
      " tls=" + std::to_string(diag.out_of_window_tls) +
      " services=" + std::to_string(diag.out_of_window_services));
  m.notes.push_back("orgs_without_tls=" + std::to_string(diag.orgs_without_tls.size()));
  out.finalize(m);
  return 0;
}

struct AnalyzeArgs {
  std::string profiles;
  std::string out;
  double alpha = 0.01;
  double ci = 0.98;
};

int run_analyze(const AnalyzeArgs& args) {
  std::vector<riskvectors::RiskProfile> profiles =
      riskvectors::read_profiles_file(args.profiles);

  models::VariantFit pooled = models::fit_variants(profiles, models::Variant::Pooled, args.ci);
  models::VariantFit unpooled =
      models::fit_variants(profiles, models::Variant::Unpooled, args.ci);
  models::ModelComparison comparison = models::compare_models(profiles, args.ci);
  std::vector<models::CorrelationRow> correlations = models::correlation_table(profiles);
  models::PresenceAnalysis presence = models::presence_analysis(profiles);
  models::KsMatrix ks = models::industry_ks_matrix(profiles, args.alpha);

  manifest::OutputDir out(args.out);
  out.write_file("regression_pooled.csv", [&](std::ostream& os) {
    models::write_regression_csv(*pooled.combined, os);
  });
  out.write_file("regression_unpooled.csv", [&](std::ostream& os) {
    models::write_unpooled_csv(unpooled.per_industry, os);
  });
  out.write_file("model_comparison.csv", [&](std::ostream& os) {
    models::write_model_comparison_csv(comparison, os);
  });
  out.write_file("correlations.csv", [&](std::ostream& os) {
    models::write_correlations_csv(correlations, os);
  });
  out.write_file("presence_tests.csv",
                 [&](std::ostream& os) { models::write_presence_csv(presence, os); });
  out.write_file("ks_matrix.csv",
                 [&](std::ostream& os) { models::write_ks_matrix_csv(ks, os); });

  manifest::RunManifest m;
  m.command = "analyze";
  add_input(m, args.profiles);
  m.parameters["alpha"] = format_double(args.alpha);
  m.parameters["ci"] = format_double(args.ci);
  models::Design design = models::build_design(profiles);
  m.notes.push_back("regression_rows=" + std::to_string(design.industries.size()) +
                    " excluded_zero_bot=" + std::to_string(design.excluded));
  if (!unpooled.dropped_industries.empty()) {
    std::string joined;
    for (const auto& industry : unpooled.dropped_industries) {
      if (!joined.empty()) joined += ",";
      joined += industry;
    }
    m.notes.push_back("dropped_industries=" + joined);
  }
  if (!ks.skipped_industries.empty())
    m.notes.push_back("ks_skipped_industries=" + std::to_string(ks.skipped_industries.size()));
  m.notes.push_back("ks_fraction_significant=" + format_double(ks.fraction_significant) +
                    " at alpha=" + format_double(ks.alpha));
  m.notes.push_back("model_selected=" + comparison.selected);
  out.finalize(m);
  return 0;
}

struct BreachArgs {
  std::string profiles;
  std::string breaches;
  std::string out;
};

int run_breach(const BreachArgs& args) {
  std::vector<riskvectors::RiskProfile> profiles =
      riskvectors::read_profiles_file(args.profiles);
  auto breaches = ingest::parse_breaches_file(args.breaches);
  models::BreachAssociation assoc = models::breach_association(profiles, breaches.records);

  manifest::OutputDir out(args.out);
  out.write_file("breach_tests.csv",
                 [&](std::ostream& os) { models::write_breach_csv(assoc, os); });

  manifest::RunManifest m;
  m.command = "breach";
  add_input(m, args.profiles);
  add_input(m, args.breaches);
  if (breaches.diag.skipped > 0)
    m.notes.push_back("breaches: skipped " + std::to_string(breaches.diag.skipped) + " rows");
  if (assoc.unknown_breach_orgs > 0)
    m.notes.push_back("breach orgs not in profiles: " +
                      std::to_string(assoc.unknown_breach_orgs));
  out.finalize(m);
  return 0;
}

struct ReportArgs {
  std::string analysis;
  std::string profiles;
  std::string out;
  double alpha = 0.01;
  std::size_t bins = 50;
  double bandwidth = 0.0;
};

int run_report(const ReportArgs& args) {
  namespace fs = std::filesystem;
  std::vector<riskvectors::RiskProfile> profiles =
      riskvectors::read_profiles_file(args.profiles);
  std::string pooled_path = (fs::path(args.analysis) / "regression_pooled.csv").string();
  std::string unpooled_path = (fs::path(args.analysis) / "regression_unpooled.csv").string();
  std::string breach_path = (fs::path(args.analysis) / "breach_tests.csv").string();
  csv::Table pooled = csv::read_table_file(pooled_path);
  csv::Table unpooled = csv::read_table_file(unpooled_path);
  bool have_breach = fs::exists(breach_path);
  csv::Table breach;
  if (have_breach) breach = csv::read_table_file(breach_path);

  report::ReportOptions options;
  options.bins = args.bins;
  options.alpha = args.alpha;
  options.kde_bandwidth = args.bandwidth;
  report::ReportInputs inputs;
  inputs.profiles = profiles;
  inputs.regression_pooled = &pooled;
  inputs.regression_unpooled = &unpooled;
  inputs.breach_tests = have_breach ? &breach : nullptr;

  manifest::OutputDir out(args.out);
  report::write_figures(inputs, options, out);

  manifest::RunManifest m;
  m.command = "report";
  add_input(m, args.profiles);
  add_input(m, pooled_path);
  add_input(m, unpooled_path);
  if (have_breach)
    add_input(m, breach_path);
  else
    m.notes.push_back("no breach_tests.csv in analysis dir; fig_breach.csv skipped");
  m.parameters["alpha"] = format_double(args.alpha);
  m.parameters["bins"] = std::to_string(args.bins);
  m.parameters["bandwidth"] = format_double(args.bandwidth);
  out.finalize(m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riskpipe: organizational risk vectors vs botnet infections"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  synth_cmd->add_option("--orgs", synth_args.orgs, "Number of organizations")->required();
  synth_cmd->add_option("--industries", synth_args.industries, "Number of industries");
  synth_cmd->add_option("--seed", synth_args.seed, "RNG seed");
  synth_cmd->add_option("--mode", synth_args.mode, "profiles|events");
  synth_cmd->add_option("--spread", synth_args.spread, "Per-industry coefficient spread");
  synth_cmd->add_option("--sigma", synth_args.sigma, "Residual standard deviation");
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();

  AggregateArgs agg_args;
  auto* agg_cmd = app.add_subcommand("aggregate", "Aggregate event files into risk profiles");
  agg_cmd->add_option("--orgs-file", agg_args.orgs_file, "Organization registry CSV")->required();
  agg_cmd->add_option("--ipmap", agg_args.ipmap, "CIDR map CSV")->required();
  agg_cmd->add_option("--tls", agg_args.tls, "TLS observations CSV")->required();
  agg_cmd->add_option("--services", agg_args.services, "Service observations CSV")->required();
  agg_cmd->add_option("--seeders", agg_args.seeders, "Seeder observations CSV")->required();
  agg_cmd->add_option("--infections", agg_args.infections, "Infection events CSV")->required();
  agg_cmd->add_option("--months", agg_args.months, "Month range A:B or comma list");
  agg_cmd->add_option("--out", agg_args.out, "Output directory")->required();

  AnalyzeArgs an_args;
  auto* an_cmd = app.add_subcommand("analyze", "Fit models and association tests");
  an_cmd->add_option("--profiles", an_args.profiles, "Profiles CSV")->required();
  an_cmd->add_option("--alpha", an_args.alpha, "Significance threshold");
  an_cmd->add_option("--ci", an_args.ci, "Confidence level");
  an_cmd->add_option("--out", an_args.out, "Output directory")->required();

  BreachArgs br_args;
  auto* br_cmd = app.add_subcommand("breach", "Breach association G-tests");
  br_cmd->add_option("--profiles", br_args.profiles, "Profiles CSV")->required();
  br_cmd->add_option("--breaches", br_args.breaches, "Breach events CSV")->required();
  br_cmd->add_option("--out", br_args.out, "Output directory")->required();

  ReportArgs rep_args;
  auto* rep_cmd = app.add_subcommand("report", "Emit figure-data files");
  rep_cmd->add_option("--analysis", rep_args.analysis, "Analysis output directory")->required();
  rep_cmd->add_option("--profiles", rep_args.profiles, "Profiles CSV")->required();
  rep_cmd->add_option("--alpha", rep_args.alpha, "Significance threshold");
  rep_cmd->add_option("--bins", rep_args.bins, "Histogram bin count");
  rep_cmd->add_option("--bandwidth", rep_args.bandwidth, "KDE bandwidth (0 = Scott's rule)");
  rep_cmd->add_option("--out", rep_args.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (agg_cmd->parsed()) return run_aggregate(agg_args);
    if (an_cmd->parsed()) return run_analyze(an_args);
    if (br_cmd->parsed()) return run_breach(br_args);
    if (rep_cmd->parsed()) return run_report(rep_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
