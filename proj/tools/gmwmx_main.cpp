// Command line front end: `gmwmx estimate` fits a trajectory + noise model to
// a position file, `gmwmx simulate` runs the Monte-Carlo harness on a
// scenario configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "gmwmx/errors.hpp"
#include "gmwmx/estimators.hpp"
#include "gmwmx/io.hpp"
#include "gmwmx/likelihood.hpp"
#include "gmwmx/simulation.hpp"

namespace {

using gmwmx::Error;
using gmwmx::ErrorKind;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::parse_empty:
    case ErrorKind::parse_order:
      return 3;
    case ErrorKind::invalid_argument:
    case ErrorKind::domain:
    case ErrorKind::rank_deficient:
    case ErrorKind::degenerate_column:
    case ErrorKind::insufficient_length:
    case ErrorKind::under_identified:
    case ErrorKind::degenerate_weight:
    case ErrorKind::config:
      return 4;
    case ErrorKind::not_positive_definite:
      return 5;
    case ErrorKind::size_cap:
      return 6;
    case ErrorKind::harness:
      return 7;
  }
  return 1;
}

struct EstimateArgs {
  std::string input;
  std::string format = "mom";
  std::string component = "u";
  std::string model = "wn+pl";
  std::string method = "gmwmx1";
  double alpha = 0.05;
  std::string output;
  std::string wv_csv;
  std::string omega = "plugin";
  int levels = 0;
  int mle_cap = gmwmx::kDefaultLikelihoodCap;
  double units = 1.0;
  double t0 = -1.0;
  std::vector<double> extra_offsets;
  std::vector<double> harmonics = {1.0, 2.0};
  bool no_intercept = false;
  bool no_trend = false;
};

int run_estimate(const EstimateArgs& args) {
  gmwmx::TimeSeries series = gmwmx::read_series_file(
      args.input, args.format, gmwmx::pos_component_from_name(args.component),
      args.units);

  gmwmx::FunctionalSpec spec;
  spec.reference_epoch = args.t0 >= 0.0 ? args.t0 : series.epochs.front();
  spec.include_intercept = !args.no_intercept;
  spec.include_trend = !args.no_trend;
  spec.harmonic_frequencies = args.harmonics;
  spec.offset_epochs = series.offsets_declared;
  spec.offset_epochs.insert(spec.offset_epochs.end(),
                            args.extra_offsets.begin(),
                            args.extra_offsets.end());

  const gmwmx::ModelFamily family = gmwmx::family_from_string(args.model);
  const gmwmx::Method method = gmwmx::method_from_name(args.method);

  gmwmx::EstimationResult result;
  switch (method) {
    case gmwmx::Method::gmwmx1:
    case gmwmx::Method::gmwmx2: {
      gmwmx::GmwmxOptions options;
      options.iterations = method == gmwmx::Method::gmwmx2 ? 2 : 1;
      options.alpha = args.alpha;
      options.levels = args.levels;
      options.omega_kind = args.omega == "identity"
                               ? gmwmx::OmegaKind::identity
                               : gmwmx::OmegaKind::plugin;
      result = gmwmx::gmwmx_estimate(series, spec, family, options);
      break;
    }
    case gmwmx::Method::mle: {
      gmwmx::MleOptions options;
      options.alpha = args.alpha;
      options.max_n = args.mle_cap;
      result = gmwmx::mle_fit(series, spec, family, options);
      break;
    }
    default:
      throw Error(ErrorKind::invalid_argument,
                  "method must be gmwmx1, gmwmx2 or mle");
  }

  nlohmann::ordered_json resolved;
  resolved["input"] = args.input;
  resolved["format"] = args.format;
  resolved["component"] = args.component;
  resolved["model"] = args.model;
  resolved["method"] = args.method;
  resolved["alpha"] = args.alpha;
  resolved["omega"] = args.omega;
  resolved["levels"] = args.levels;
  resolved["units"] = args.units;
  resolved["t0"] = spec.reference_epoch;
  resolved["harmonics"] = args.harmonics;
  resolved["offsets"] = spec.offset_epochs;
  resolved["include_intercept"] = spec.include_intercept;
  resolved["include_trend"] = spec.include_trend;
  resolved["mle_cap"] = args.mle_cap;

  const std::string text = gmwmx::estimation_result_to_json(
      result, args.method, series.station_id, series.size(), resolved.dump());
  if (args.output.empty()) {
    std::cout << text;
  } else {
    gmwmx::write_text_file(args.output, text);
  }
  if (!args.wv_csv.empty()) {
    gmwmx::write_text_file(args.wv_csv, gmwmx::wv_table_to_csv(result));
  }
  return 0;
}

struct SimulateArgs {
  std::string scenario;
  int reps = -1;
  std::int64_t seed = -1;
  int workers = 0;
  std::string output_dir = ".";
  bool dump_config = false;
};

int run_simulate(const SimulateArgs& args) {
  gmwmx::ScenarioConfig config =
      gmwmx::scenario_from_json(gmwmx::read_text_file(args.scenario));
  if (args.reps > 0) config.n_reps = args.reps;
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (args.workers > 0) config.workers = args.workers;

  const gmwmx::McSummary summary = gmwmx::run_monte_carlo(config);
  const std::string scenario_json = gmwmx::scenario_to_json(config);

  namespace fs = std::filesystem;
  fs::create_directories(args.output_dir);
  const fs::path dir(args.output_dir);
  gmwmx::write_text_file((dir / "mc_summary.json").string(),
                         gmwmx::mc_summary_to_json(summary, scenario_json));
  gmwmx::write_text_file((dir / "mc_summary.csv").string(),
                         gmwmx::mc_summary_to_csv(summary));
  gmwmx::write_text_file((dir / "mc_timing.json").string(),
                         gmwmx::mc_timing_to_json(summary));
  if (args.dump_config) {
    gmwmx::write_text_file((dir / "scenario_resolved.json").string(),
                           scenario_json);
  }
  std::cout << "wrote " << (dir / "mc_summary.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory + stochastic noise model estimation for daily "
               "position time series"};
  app.require_subcommand(1);

  EstimateArgs est;
  CLI::App* estimate = app.add_subcommand(
      "estimate", "Fit functional and noise models to a position file");
  estimate->add_option("--input", est.input, "Input file")->required();
  estimate->add_option("--format", est.format, "mom|pos")
      ->check(CLI::IsMember({"mom", "pos"}));
  estimate->add_option("--component", est.component,
                       "Coordinate for pos files: n|e|u");
  estimate->add_option("--model", est.model,
                       "Noise family, e.g. wn+pl or wn+matern");
  estimate->add_option("--method", est.method, "gmwmx1|gmwmx2|mle")
      ->check(CLI::IsMember({"gmwmx1", "gmwmx2", "mle"}));
  estimate->add_option("--alpha", est.alpha, "1 - confidence level");
  estimate->add_option("--output", est.output, "Result JSON path (default stdout)");
  estimate->add_option("--wv-csv", est.wv_csv, "Wavelet-variance table CSV path");
  estimate->add_option("--omega", est.omega, "plugin|identity weighting")
      ->check(CLI::IsMember({"plugin", "identity"}));
  estimate->add_option("--scales", est.levels,
                       "Wavelet scales J (default floor(log2 n) - 2)");
  estimate->add_option("--mle-cap", est.mle_cap,
                       "Sample cap for the likelihood oracle");
  estimate->add_option("--units", est.units,
                       "Multiplier applied to mom values to get mm");
  estimate->add_option("--t0", est.t0,
                       "Reference epoch (MJD; default first epoch)");
  estimate->add_option("--offset", est.extra_offsets,
                       "Additional offset epoch (repeatable). Offsets apply "
                       "at their own epoch: H(0) = 1");
  estimate->add_option("--harmonics", est.harmonics,
                       "Harmonic frequencies in cycles/year");
  estimate->add_flag("--no-intercept", est.no_intercept, "Drop the intercept");
  estimate->add_flag("--no-trend", est.no_trend, "Drop the trend");

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run the Monte-Carlo harness on a scenario configuration");
  simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
  simulate->add_option("--reps", sim.reps, "Override replication count");
  simulate->add_option("--seed", sim.seed, "Override RNG seed");
  simulate->add_option("--workers", sim.workers,
                       "Worker threads (default GMWMX_WORKERS or hardware)");
  simulate->add_option("--output", sim.output_dir, "Output directory");
  simulate->add_flag("--dump-config", sim.dump_config,
                     "Also write the resolved scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (estimate->parsed()) return run_estimate(est);
    if (simulate->parsed()) return run_simulate(sim);
  } catch (const Error& e) {
    std::cerr << gmwmx::error_to_json(e.code(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << gmwmx::error_to_json("E_INTERNAL", e.what());
    return 1;
  }
  return 2;
}
