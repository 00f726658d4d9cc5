#ifndef GMWMX_SIMULATION_HPP
#define GMWMX_SIMULATION_HPP

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gmwmx/estimators.hpp"
#include "gmwmx/functional_model.hpp"
#include "gmwmx/likelihood.hpp"
#include "gmwmx/stochastic_model.hpp"
#include "gmwmx/time_series.hpp"

namespace gmwmx {

enum class Method { gmwmx1, gmwmx2, mle, truth_hook };

std::string method_name(Method method);
Method method_from_name(const std::string& name);

struct OffsetPolicy {
  bool enabled = false;
  double block_years = 5.0;      // one offset per complete block
  double amplitude_sd_mm = 10.0; // offset sizes drawn N(0, sd^2)
};

// One synthetic experiment: daily sampling over the span, functional truth,
// composite noise truth, optional gaps and offsets.
struct ScenarioConfig {
  std::string name = "scenario";
  double years = 10.0;
  double intercept_mm = 0.0;
  double trend_mm_per_year = 5.0;
  double seasonal_amplitude_mm = 2.5;
  double seasonal_phase_days = 145.0;  // phase w.r.t. the reference epoch
  StochasticModel noise_truth{{PowerLaw{10.0, 0.4}, WhiteNoise{15.0}}};

  double gap_fraction = 0.0;
  OffsetPolicy offsets;

  int n_reps = 500;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::vector<Method> methods = {Method::gmwmx1};

  ModelFamily fit_family;                    // empty: the truth family
  std::vector<double> fit_harmonics = {1.0}; // cycles/year
  int workers = 0;                           // 0: GMWMX_WORKERS or hardware

  double start_epoch_mjd = 51544.0;
  int max_sim_n = 16384;  // exact Gaussian sampling cap

  GmwmxOptions gmwmx_options;  // iteration count is set per method
  MleOptions mle_options;

  int sample_count() const {
    return static_cast<int>(std::lround(years * kDaysPerYear));
  }
  // Annual signal expanded onto the sin/cos columns.
  double seasonal_sin_coefficient() const;
  double seasonal_cos_coefficient() const;

  void validate() const;
};

struct TruthRecord {
  Eigen::VectorXd x_true;
  std::vector<std::string> x_labels;
  Eigen::VectorXd gamma_true;
  std::vector<std::string> gamma_labels;
  std::vector<double> offset_epochs;
};

// Deterministic per-replication generator stream.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t rep);

// Exact draw from a stationary Gaussian process with the given
// autocovariances, through the innovations (sequential Cholesky) form.
Eigen::VectorXd sample_stationary_gaussian(const Eigen::VectorXd& acov,
                                           std::mt19937_64& rng);

// Functional mean + exact Gaussian noise on the complete daily grid.
// Replication `rep` owns an independent substream of the scenario seed.
std::pair<TimeSeries, TruthRecord> simulate_series(const ScenarioConfig& config,
                                                   int rep);

// Removes floor(fraction * n) interior epochs uniformly at random; the first
// and last epochs always survive.
TimeSeries apply_gaps(const TimeSeries& series, double gap_fraction,
                      std::mt19937_64& rng);

struct ParamStats {
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  std::optional<double> coverage;     // functional parameters only
  std::optional<double> coverage_se;  // binomial error at the realized count
  int count = 0;
};

struct MethodSummary {
  std::map<std::string, ParamStats> functional;
  std::map<std::string, ParamStats> stochastic;
  double mean_seconds = 0.0;
  int failures = 0;
  int reps_used = 0;
  std::vector<std::string> failure_messages;
};

struct McSummary {
  std::string scenario_name;
  int n_reps = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::map<std::string, MethodSummary> methods;
};

// One per-replication observation, for the optional raw dump.
struct RepDumpRow {
  int rep = 0;
  std::string method;
  std::string group;  // "functional" | "stochastic"
  std::string label;
  double estimate = 0.0;
  double truth = 0.0;
  int ci_hit = -1;  // -1 when no interval applies
};

// Runs every replication (in parallel up to the worker count), estimates
// with every configured method and reduces to per-parameter bias, sd, RMSE
// and empirical coverage. The reduction is ordered by replication index, so
// the summary does not depend on the worker count. Replications that throw
// are excluded and counted; more than 5% failures aborts the harness.
// `dump`, when given, receives one row per (rep, method, parameter) in
// deterministic order.
McSummary run_monte_carlo(const ScenarioConfig& config,
                          std::vector<RepDumpRow>* dump = nullptr);

int resolve_workers(int requested);

}  // namespace gmwmx

#endif
