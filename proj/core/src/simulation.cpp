#include "gmwmx/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "gmwmx/errors.hpp"

namespace gmwmx {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::gmwmx1: return "gmwmx1";
    case Method::gmwmx2: return "gmwmx2";
    case Method::mle: return "mle";
    case Method::truth_hook: return "truth";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "gmwmx1") return Method::gmwmx1;
  if (name == "gmwmx2") return Method::gmwmx2;
  if (name == "mle") return Method::mle;
  if (name == "truth") return Method::truth_hook;
  throw Error(ErrorKind::config, "unknown method '" + name + "'");
}

double ScenarioConfig::seasonal_sin_coefficient() const {
  const double phi =
      2.0 * std::numbers::pi * seasonal_phase_days / kDaysPerYear;
  return seasonal_amplitude_mm * std::cos(phi);
}

double ScenarioConfig::seasonal_cos_coefficient() const {
  const double phi =
      2.0 * std::numbers::pi * seasonal_phase_days / kDaysPerYear;
  return seasonal_amplitude_mm * std::sin(phi);
}

void ScenarioConfig::validate() const {
  if (!(years > 0.0)) throw Error(ErrorKind::config, "years must be positive");
  if (sample_count() < 32) {
    throw Error(ErrorKind::config, "span too short to estimate anything");
  }
  if (sample_count() > max_sim_n) {
    throw Error(ErrorKind::size_cap,
                "scenario needs n = " + std::to_string(sample_count()) +
                    " > " + std::to_string(max_sim_n) +
                    " samples; exact Gaussian sampling is desk scale, pick a "
                    "shorter span");
  }
  if (!(gap_fraction >= 0.0) || gap_fraction >= 1.0) {
    throw Error(ErrorKind::config, "gap_fraction must lie in [0, 1)");
  }
  if (n_reps < 1) throw Error(ErrorKind::config, "n_reps must be >= 1");
  if (!(alpha > 0.0) || !(alpha < 0.5)) {
    throw Error(ErrorKind::config, "alpha must lie in (0, 0.5)");
  }
  if (methods.empty()) throw Error(ErrorKind::config, "no methods configured");
  for (Method m : methods) {
    if (m == Method::mle && sample_count() > mle_options.max_n) {
      throw Error(ErrorKind::size_cap,
                  "mle is capped at n = " + std::to_string(mle_options.max_n) +
                      " but the scenario has n = " +
                      std::to_string(sample_count()) +
                      "; use a shorter span for the oracle");
    }
  }
  if (offsets.enabled && !(offsets.block_years > 0.0)) {
    throw Error(ErrorKind::config, "offset block length must be positive");
  }
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t rep) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (rep + 1));
  std::uint32_t words[8];
  for (auto& w : words) {
    w = static_cast<std::uint32_t>(splitmix64(state) >> 16);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  return std::mt19937_64(seq);
}

Eigen::VectorXd sample_stationary_gaussian(const Eigen::VectorXd& acov,
                                           std::mt19937_64& rng) {
  const Eigen::Index n = acov.size();
  if (n == 0) return Eigen::VectorXd(0);
  if (!(acov[0] > 0.0)) {
    throw Error(ErrorKind::not_positive_definite,
                "sample_stationary_gaussian: non-positive variance");
  }
  std::normal_distribution<double> standard_normal(0.0, 1.0);

  Eigen::VectorXd x(n);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);  // order t-1 coefficients
  double v = acov[0];
  x[0] = std::sqrt(v) * standard_normal(rng);
  for (Eigen::Index t = 1; t < n; ++t) {
    double acc = acov[t];
    for (Eigen::Index k = 1; k < t; ++k) acc -= phi[k - 1] * acov[t - k];
    const double kappa = acc / v;
    if (!(std::abs(kappa) < 1.0)) {
      throw Error(ErrorKind::not_positive_definite,
                  "sample_stationary_gaussian: partial correlation left "
                  "(-1, 1) at step " + std::to_string(t));
    }
    // phi_{t,k} = phi_{t-1,k} - kappa * phi_{t-1,t-k}, symmetric in place
    for (Eigen::Index i = 0, j = t - 2; i < j; ++i, --j) {
      const double pi = phi[i], pj = phi[j];
      phi[i] = pi - kappa * pj;
      phi[j] = pj - kappa * pi;
    }
    if (t >= 2 && (t - 2) % 2 == 0) {
      const Eigen::Index mid = (t - 2) / 2;
      phi[mid] -= kappa * phi[mid];
    }
    phi[t - 1] = kappa;
    v *= (1.0 - kappa * kappa);

    double mean = 0.0;
    for (Eigen::Index k = 1; k <= t; ++k) mean += phi[k - 1] * x[t - k];
    x[t] = mean + std::sqrt(v) * standard_normal(rng);
  }
  return x;
}

namespace {

struct DrawnOffsets {
  std::vector<double> epochs;
  std::vector<double> amplitudes;
};

// One offset per complete block, placed uniformly inside the block but never
// on the first epoch (H(0) = 1 would alias the intercept) nor beyond the
// last.
DrawnOffsets draw_offsets(const ScenarioConfig& config, std::mt19937_64& rng) {
  DrawnOffsets out;
  if (!config.offsets.enabled) return out;
  const int n = config.sample_count();
  const auto block_days =
      static_cast<long>(std::lround(config.offsets.block_years * kDaysPerYear));
  const long blocks = static_cast<long>(n) / block_days;
  std::normal_distribution<double> amplitude(0.0, config.offsets.amplitude_sd_mm);
  for (long b = 0; b < blocks; ++b) {
    const long lo = std::max<long>(b * block_days, 1);
    const long hi = std::min<long>((b + 1) * block_days - 1, n - 1);
    if (hi < lo) continue;
    std::uniform_int_distribution<long> day(lo, hi);
    out.epochs.push_back(config.start_epoch_mjd +
                         static_cast<double>(day(rng)));
    out.amplitudes.push_back(amplitude(rng));
  }
  return out;
}

FunctionalSpec truth_spec(const ScenarioConfig& config,
                          const std::vector<double>& offset_epochs) {
  FunctionalSpec spec;
  spec.reference_epoch = config.start_epoch_mjd;
  spec.harmonic_frequencies = {1.0};
  spec.offset_epochs = offset_epochs;
  return spec;
}

}  // namespace

std::pair<TimeSeries, TruthRecord> simulate_series(const ScenarioConfig& config,
                                                   int rep) {
  config.validate();
  const int n = config.sample_count();

  std::mt19937_64 rng = substream(config.seed, static_cast<std::uint64_t>(rep));
  const DrawnOffsets offsets = draw_offsets(config, rng);

  TimeSeries series;
  series.station_id = config.name + "/rep" + std::to_string(rep);
  series.epochs.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    series.epochs[static_cast<std::size_t>(i)] =
        config.start_epoch_mjd + static_cast<double>(i);
  }
  series.offsets_declared = offsets.epochs;

  const FunctionalSpec spec = truth_spec(config, offsets.epochs);
  const DesignMatrix design = build_design_matrix(series.epochs, spec);

  TruthRecord truth;
  truth.x_labels = design.column_labels;
  truth.offset_epochs = offsets.epochs;
  truth.x_true.resize(design.cols());
  Eigen::Index col = 0;
  truth.x_true[col++] = config.intercept_mm;
  truth.x_true[col++] = config.trend_mm_per_year;
  truth.x_true[col++] = config.seasonal_sin_coefficient();
  truth.x_true[col++] = config.seasonal_cos_coefficient();
  for (double amp : offsets.amplitudes) truth.x_true[col++] = amp;
  truth.gamma_true = config.noise_truth.parameters();
  truth.gamma_labels = config.noise_truth.parameter_labels();

  const Eigen::VectorXd mean = evaluate_mean(design, truth.x_true);
  const Eigen::VectorXd noise = sample_stationary_gaussian(
      config.noise_truth.autocovariances(n - 1), rng);

  series.values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    series.values[static_cast<std::size_t>(i)] = mean[i] + noise[i];
  }
  return {std::move(series), std::move(truth)};
}

TimeSeries apply_gaps(const TimeSeries& series, double gap_fraction,
                      std::mt19937_64& rng) {
  if (!(gap_fraction >= 0.0) || gap_fraction >= 1.0) {
    throw Error(ErrorKind::invalid_argument, "gap_fraction must lie in [0, 1)");
  }
  const std::size_t n = series.size();
  const auto remove =
      static_cast<std::size_t>(std::floor(gap_fraction * static_cast<double>(n)));
  if (remove == 0) return series;
  if (n < remove + 2) {
    throw Error(ErrorKind::invalid_argument, "not enough interior epochs");
  }

  // Partial Fisher-Yates over the interior indices.
  std::vector<std::size_t> interior(n - 2);
  for (std::size_t i = 0; i < interior.size(); ++i) interior[i] = i + 1;
  for (std::size_t i = 0; i < remove; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, interior.size() - 1);
    std::swap(interior[i], interior[pick(rng)]);
  }
  std::vector<bool> drop(n, false);
  for (std::size_t i = 0; i < remove; ++i) drop[interior[i]] = true;

  TimeSeries gapped;
  gapped.station_id = series.station_id;
  gapped.offsets_declared = series.offsets_declared;
  gapped.metadata = series.metadata;
  gapped.epochs.reserve(n - remove);
  gapped.values.reserve(n - remove);
  const bool has_sigma = !series.sigma_hint.empty();
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) continue;
    gapped.epochs.push_back(series.epochs[i]);
    gapped.values.push_back(series.values[i]);
    if (has_sigma) gapped.sigma_hint.push_back(series.sigma_hint[i]);
  }
  return gapped;
}

// ---------------------------------------------------------------------------

namespace {

struct Observation {
  double error = 0.0;
  bool has_hit = false;
  bool hit = false;
};

struct MethodRecord {
  bool failed = false;
  std::string error_message;
  double seconds = 0.0;
  // label -> observation, functional and stochastic separately
  std::vector<std::pair<std::string, Observation>> functional;
  std::vector<std::pair<std::string, Observation>> stochastic;
};

struct RepRecord {
  std::vector<MethodRecord> by_method;
};

std::string pooled_label(const std::string& label) {
  return label.rfind("offset_", 0) == 0 ? "offset" : label;
}

MethodRecord run_method(Method method, const ScenarioConfig& config,
                        const TimeSeries& series, const FunctionalSpec& spec,
                        const ModelFamily& family, const TruthRecord& truth) {
  MethodRecord record;
  const auto t0 = Clock::now();
  try {
    EstimationResult result;
    switch (method) {
      case Method::gmwmx1:
      case Method::gmwmx2: {
        GmwmxOptions options = config.gmwmx_options;
        options.iterations = method == Method::gmwmx2 ? 2 : 1;
        options.alpha = config.alpha;
        result = gmwmx_estimate(series, spec, family, options);
        break;
      }
      case Method::mle: {
        MleOptions options = config.mle_options;
        options.alpha = config.alpha;
        result = mle_fit(series, spec, family, options);
        break;
      }
      case Method::truth_hook: {
        // Harness self-test estimator: reports the truth with degenerate
        // intervals.
        record.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        for (Eigen::Index i = 0; i < truth.x_true.size(); ++i) {
          Observation obs;
          obs.error = 0.0;
          obs.has_hit = true;
          obs.hit = true;
          record.functional.emplace_back(
              pooled_label(truth.x_labels[static_cast<std::size_t>(i)]), obs);
        }
        for (Eigen::Index i = 0; i < truth.gamma_true.size(); ++i) {
          record.stochastic.emplace_back(
              truth.gamma_labels[static_cast<std::size_t>(i)], Observation{});
        }
        return record;
      }
    }
    record.seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    std::map<std::string, double> truth_by_label;
    for (Eigen::Index i = 0; i < truth.x_true.size(); ++i) {
      truth_by_label[truth.x_labels[static_cast<std::size_t>(i)]] =
          truth.x_true[i];
    }
    for (Eigen::Index i = 0; i < result.x_hat.size(); ++i) {
      const std::string& label = result.x_labels[static_cast<std::size_t>(i)];
      const auto it = truth_by_label.find(label);
      const double target = it == truth_by_label.end() ? 0.0 : it->second;
      Observation obs;
      obs.error = result.x_hat[i] - target;
      obs.has_hit = true;
      obs.hit = result.ci[static_cast<std::size_t>(i)].first <= target &&
                target <= result.ci[static_cast<std::size_t>(i)].second;
      record.functional.emplace_back(pooled_label(label), obs);
    }

    std::map<std::string, double> gamma_truth;
    for (Eigen::Index i = 0; i < truth.gamma_true.size(); ++i) {
      gamma_truth[truth.gamma_labels[static_cast<std::size_t>(i)]] =
          truth.gamma_true[i];
    }
    const Eigen::VectorXd gamma_hat = result.model_hat.parameters();
    for (Eigen::Index i = 0; i < gamma_hat.size(); ++i) {
      const std::string& label =
          result.gamma_labels[static_cast<std::size_t>(i)];
      const auto it = gamma_truth.find(label);
      if (it == gamma_truth.end()) continue;  // family differs from the truth
      Observation obs;
      obs.error = gamma_hat[i] - it->second;
      record.stochastic.emplace_back(label, obs);
    }
  } catch (const std::exception& e) {
    record.failed = true;
    record.error_message = e.what();
    record.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  }
  return record;
}

void accumulate(std::map<std::string, std::vector<Observation>>& sink,
                const std::vector<std::pair<std::string, Observation>>& items) {
  for (const auto& [label, obs] : items) sink[label].push_back(obs);
}

ParamStats reduce_stats(const std::vector<Observation>& observations) {
  ParamStats stats;
  stats.count = static_cast<int>(observations.size());
  if (observations.empty()) return stats;
  double sum = 0.0, sum_sq = 0.0;
  int hits = 0, hit_count = 0;
  for (const Observation& o : observations) {
    sum += o.error;
    sum_sq += o.error * o.error;
    if (o.has_hit) {
      ++hit_count;
      if (o.hit) ++hits;
    }
  }
  const double n = static_cast<double>(observations.size());
  stats.bias = sum / n;
  stats.rmse = std::sqrt(sum_sq / n);
  stats.sd = std::sqrt(std::max(sum_sq / n - stats.bias * stats.bias, 0.0));
  if (hit_count > 0) {
    const double c = static_cast<double>(hits) / hit_count;
    stats.coverage = c;
    stats.coverage_se = std::sqrt(c * (1.0 - c) / hit_count);
  }
  return stats;
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GMWMX_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

McSummary run_monte_carlo(const ScenarioConfig& config) {
  config.validate();
  const int n_reps = config.n_reps;
  const int workers = std::min(resolve_workers(config.workers), n_reps);

  const ModelFamily family = config.fit_family.empty()
                                 ? config.noise_truth.family()
                                 : config.fit_family;

  std::vector<RepRecord> records(static_cast<std::size_t>(n_reps));
  std::atomic<int> next_rep{0};

  auto worker = [&]() {
    while (true) {
      const int rep = next_rep.fetch_add(1);
      if (rep >= n_reps) break;
      RepRecord& record = records[static_cast<std::size_t>(rep)];
      record.by_method.resize(config.methods.size());
      try {
        auto [series, truth] = simulate_series(config, rep);
        if (config.gap_fraction > 0.0) {
          // Continue the replication stream: generation happened first.
          std::mt19937_64 gap_rng =
              substream(config.seed ^ 0xA5A5A5A5A5A5A5A5ULL,
                        static_cast<std::uint64_t>(rep));
          series = apply_gaps(series, config.gap_fraction, gap_rng);
        }
        FunctionalSpec spec;
        spec.reference_epoch = config.start_epoch_mjd;
        spec.harmonic_frequencies = config.fit_harmonics;
        spec.offset_epochs = truth.offset_epochs;

        for (std::size_t m = 0; m < config.methods.size(); ++m) {
          record.by_method[m] = run_method(config.methods[m], config, series,
                                           spec, family, truth);
        }
      } catch (const std::exception& e) {
        for (auto& mr : record.by_method) {
          mr.failed = true;
          mr.error_message = e.what();
        }
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Ordered reduction: identical summaries for any worker count.
  McSummary summary;
  summary.scenario_name = config.name;
  summary.n_reps = n_reps;
  summary.seed = config.seed;
  summary.alpha = config.alpha;

  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    MethodSummary method_summary;
    std::map<std::string, std::vector<Observation>> functional, stochastic;
    double total_seconds = 0.0;
    for (int rep = 0; rep < n_reps; ++rep) {
      const MethodRecord& record =
          records[static_cast<std::size_t>(rep)].by_method[m];
      if (record.failed) {
        ++method_summary.failures;
        if (method_summary.failure_messages.size() < 5) {
          method_summary.failure_messages.push_back(
              "rep " + std::to_string(rep) + ": " + record.error_message);
        }
        continue;
      }
      ++method_summary.reps_used;
      total_seconds += record.seconds;
      accumulate(functional, record.functional);
      accumulate(stochastic, record.stochastic);
    }
    if (method_summary.reps_used > 0) {
      method_summary.mean_seconds = total_seconds / method_summary.reps_used;
    }
    for (const auto& [label, obs] : functional) {
      method_summary.functional[label] = reduce_stats(obs);
    }
    for (const auto& [label, obs] : stochastic) {
      method_summary.stochastic[label] = reduce_stats(obs);
    }
    if (method_summary.failures * 20 > n_reps) {  // > 5%
      throw Error(ErrorKind::harness,
                  method_name(config.methods[m]) + " failed in " +
                      std::to_string(method_summary.failures) + " of " +
                      std::to_string(n_reps) + " replications; first: " +
                      (method_summary.failure_messages.empty()
                           ? "unknown"
                           : method_summary.failure_messages.front()));
    }
    summary.methods[method_name(config.methods[m])] = method_summary;
  }
  return summary;
}

}  // namespace gmwmx
