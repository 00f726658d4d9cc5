// Microbenchmarks for the hot paths: MODWT filtering, theoretical WV,
// Toeplitz solves, the exact Gaussian sampler and both end-to-end
// estimators. Run with --benchmark_filter=... to narrow down.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gmwmx/estimators.hpp"
#include "gmwmx/likelihood.hpp"
#include "gmwmx/linalg.hpp"
#include "gmwmx/simulation.hpp"
#include "gmwmx/stochastic_model.hpp"
#include "gmwmx/wavelet.hpp"

namespace {

using namespace gmwmx;

std::vector<double> random_series(int n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = normal(rng);
  return x;
}

StochasticModel plwn() {
  return StochasticModel({PowerLaw{10.0, 0.4}, WhiteNoise{15.0}});
}

TimeSeries simulated(int n) {
  ScenarioConfig config;
  config.years = n / kDaysPerYear;
  config.max_sim_n = 1 << 15;
  return simulate_series(config, 0).first;
}

FunctionalSpec annual_spec() {
  FunctionalSpec spec;
  spec.reference_epoch = 51544.0;
  spec.harmonic_frequencies = {1.0};
  return spec;
}

void bm_modwt(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto x = random_series(n);
  const int levels = default_levels(static_cast<std::size_t>(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(modwt_haar(x, levels));
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_modwt)->Range(1 << 10, 1 << 15)->Complexity(benchmark::oNLogN);

void bm_theoretical_wv_closed_form(benchmark::State& state) {
  const auto levels = static_cast<int>(state.range(0));
  const StochasticModel model = plwn();
  for (auto _ : state) {
    benchmark::DoNotOptimize(theoretical_wv_closed_form(model, levels));
  }
}
BENCHMARK(bm_theoretical_wv_closed_form)->DenseRange(6, 14, 2);

void bm_theoretical_wv_definitional(benchmark::State& state) {
  const auto levels = static_cast<int>(state.range(0));
  const StochasticModel model = plwn();
  for (auto _ : state) {
    benchmark::DoNotOptimize(theoretical_wv(model, levels));
  }
}
BENCHMARK(bm_theoretical_wv_definitional)->DenseRange(6, 12, 2);

void bm_toeplitz_solve(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Eigen::VectorXd acov = plwn().autocovariances(n - 1);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b[i] = std::sin(0.37 * i);
  for (auto _ : state) {
    benchmark::DoNotOptimize(toeplitz_solve(acov, b));
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_toeplitz_solve)->Range(1 << 9, 1 << 13)->Complexity(benchmark::oNSquared);

void bm_dense_cholesky(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  std::vector<double> epochs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) epochs[static_cast<std::size_t>(i)] = 51544.0 + i;
  const Eigen::MatrixXd sigma = plwn().covariance_matrix(epochs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cholesky_lower(sigma));
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_dense_cholesky)->Range(1 << 9, 1 << 12)->Complexity(benchmark::oNCubed);

void bm_exact_sampler(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Eigen::VectorXd acov = plwn().autocovariances(n - 1);
  std::mt19937_64 rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_stationary_gaussian(acov, rng));
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_exact_sampler)->Range(1 << 9, 1 << 13)->Complexity(benchmark::oNSquared);

void bm_gmwmx1(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const TimeSeries series = simulated(n);
  const FunctionalSpec spec = annual_spec();
  const ModelFamily family = {NoiseType::power_law, NoiseType::white};
  for (auto _ : state) {
    benchmark::DoNotOptimize(gmwmx_estimate(series, spec, family));
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_gmwmx1)->Range(1 << 10, 1 << 14)->Complexity(benchmark::oNLogN);

void bm_gmwmx2(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const TimeSeries series = simulated(n);
  const FunctionalSpec spec = annual_spec();
  const ModelFamily family = {NoiseType::power_law, NoiseType::white};
  GmwmxOptions options;
  options.iterations = 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gmwmx_estimate(series, spec, family, options));
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_gmwmx2)->Range(1 << 10, 1 << 13)->Complexity(benchmark::oNSquared);

void bm_dense_loglik(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const TimeSeries series = simulated(n);
  const FunctionalSpec spec = annual_spec();
  const DesignMatrix design = build_design_matrix(series.epochs, spec);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      series.values.data(), static_cast<Eigen::Index>(series.size()));
  const Eigen::VectorXd x = ols(y, design).x;
  const StochasticModel model = plwn();
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaussian_loglik(y, design, x, model, 1 << 14));
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_dense_loglik)->Range(1 << 9, 1 << 12)->Complexity(benchmark::oNCubed);

}  // namespace

BENCHMARK_MAIN();
