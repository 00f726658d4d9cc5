#include <doctest.h>

#include <cmath>

#include "gmwmx/errors.hpp"
#include "gmwmx/estimators.hpp"
#include "gmwmx/simulation.hpp"
#include "test_helpers.hpp"

using namespace gmwmx;

namespace {

DesignMatrix default_design(int n) {
  FunctionalSpec spec;
  spec.reference_epoch = 51544.0;
  spec.harmonic_frequencies = {1.0};
  return build_design_matrix(test::daily_epochs(n), spec);
}

}  // namespace

TEST_CASE("ols recovers exact parameters on noiseless data") {
  const DesignMatrix design = default_design(200);
  Eigen::VectorXd truth(4);
  truth << 3.0, 5.0, 1.2, -0.7;
  const Eigen::VectorXd y = design.entries * truth;
  const OlsFit fit = ols(y, design);
  CHECK((fit.x - truth).norm() <= 1e-10 * truth.norm());
  CHECK(fit.residuals.norm() <= 1e-9);
}

TEST_CASE("ols on a column of ones is the mean") {
  FunctionalSpec spec;
  spec.include_trend = false;
  spec.harmonic_frequencies = {};
  const DesignMatrix design =
      build_design_matrix(test::daily_epochs(64), spec);
  Eigen::VectorXd y = test::white_noise(64, 4.0, 3);
  const OlsFit fit = ols(y, design);
  CHECK(fit.x[0] == doctest::Approx(y.mean()).epsilon(1e-12));
}

TEST_CASE("ols residuals are orthogonal to the design") {
  const DesignMatrix design = default_design(300);
  Eigen::VectorXd y = test::white_noise(300, 9.0, 17);
  y += design.entries * Eigen::Vector4d(1.0, 2.0, 0.5, -0.5);
  const OlsFit fit = ols(y, design);
  CHECK((design.entries.transpose() * fit.residuals).norm() <=
        1e-8 * y.norm());
}

TEST_CASE("ols xtx inverse matches the direct computation") {
  const DesignMatrix design = default_design(150);
  const Eigen::VectorXd y = test::white_noise(150, 1.0, 23);
  const OlsFit fit = ols(y, design);
  const Eigen::MatrixXd direct =
      (design.entries.transpose() * design.entries).inverse();
  CHECK((fit.xtx_inverse - direct).norm() <= 1e-9 * direct.norm());
}

TEST_CASE("gls with identity covariance reduces to ols") {
  const DesignMatrix design = default_design(128);
  const Eigen::VectorXd y = test::white_noise(128, 2.0, 31);
  const OlsFit reference = ols(y, design);
  const GlsFit fit =
      gls(y, design, Eigen::MatrixXd::Identity(128, 128));
  CHECK((fit.x - reference.x).norm() <= 1e-12 * (1.0 + reference.x.norm()));
}

TEST_CASE("gls with diagonal weights matches the weighted normal equations") {
  // 5x2 instance solved independently through the weighted normal equations
  Eigen::MatrixXd a(5, 2);
  a << 1, 0.1, 1, 0.4, 1, 1.1, 1, 1.9, 1, 2.5;
  DesignMatrix design;
  design.entries = a;
  design.column_labels = {"c0", "c1"};
  design.column_units = {"mm", "mm"};
  design.epochs = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  Eigen::VectorXd y(5);
  y << 0.3, 0.9, 1.7, 2.4, 3.6;
  Eigen::VectorXd w(5);
  w << 1.0, 0.5, 2.0, 0.25, 1.5;  // Sigma = diag(1/w)

  const Eigen::MatrixXd sigma = w.cwiseInverse().asDiagonal();
  const GlsFit fit = gls(y, design, sigma);

  const Eigen::MatrixXd awa = a.transpose() * w.asDiagonal() * a;
  const Eigen::VectorXd oracle = awa.ldlt().solve(a.transpose() * (w.asDiagonal() * y));
  CHECK((fit.x - oracle).norm() <= 1e-12 * oracle.norm());
  CHECK((fit.x_cov - awa.inverse()).norm() <= 1e-10 * awa.inverse().norm());
}

TEST_CASE("gls recovers exactly on noiseless data for any covariance") {
  const DesignMatrix design = default_design(96);
  Eigen::VectorXd truth(4);
  truth << -1.0, 2.0, 0.3, 0.9;
  const Eigen::VectorXd y = design.entries * truth;
  StochasticModel model({PowerLaw{10.0, 0.4}, WhiteNoise{15.0}});
  const GlsFit fit = gls(y, design, model.covariance_matrix(test::daily_epochs(96)));
  CHECK((fit.x - truth).norm() <= 1e-9 * truth.norm());
}

TEST_CASE("toeplitz gls equals dense gls on a complete grid") {
  const int n = 128;
  const DesignMatrix design = default_design(n);
  Eigen::VectorXd y = test::white_noise(n, 4.0, 77);
  y += design.entries * Eigen::Vector4d(0.0, 5.0, 1.0, 0.2);
  StochasticModel model({PowerLaw{10.0, 0.4}, WhiteNoise{15.0}});

  const GlsFit dense =
      gls(y, design, model.covariance_matrix(test::daily_epochs(n)));
  const GlsFit fast = gls_toeplitz(y, design, model.autocovariances(n - 1));
  CHECK((dense.x - fast.x).norm() <= 1e-8 * (1.0 + dense.x.norm()));
  CHECK((dense.x_cov - fast.x_cov).norm() <= 1e-7 * dense.x_cov.norm());
}

// ---------------------------------------------------------------------------

TEST_CASE("gmwm fit recovers a white-noise variance") {
  const int n = 8192;
  const double sigma2 = 15.0;
  const Eigen::VectorXd x = test::white_noise(n, sigma2, 4242);
  const GmwmFit fit = gmwm_fit(
      std::span<const double>(x.data(), static_cast<std::size_t>(n)),
      {NoiseType::white});
  const auto* wn = std::get_if<WhiteNoise>(&fit.model.components()[0]);
  REQUIRE(wn != nullptr);
  // three plug-in standard errors of the scale-one estimate
  CHECK(std::abs(wn->sigma2 - sigma2) <= 1.5);
  CHECK(fit.converged);
}

TEST_CASE("saturated family matches the moments exactly") {
  // one scale, one parameter: nu_1 = sigma2/2 is exactly solvable
  const Eigen::VectorXd x = test::white_noise(512, 4.0, 9);
  WvEstimate wv = empirical_wv(modwt_haar(
      std::span<const double>(x.data(), x.size()), 1));
  wv.omega = default_omega(wv);
  const GmwmFit fit = gmwm_fit(wv, {NoiseType::white});
  CHECK(fit.objective <= 1e-12);
  const auto* wn = std::get_if<WhiteNoise>(&fit.model.components()[0]);
  CHECK(wn->sigma2 == doctest::Approx(2.0 * wv.nu_hat[0]).epsilon(1e-6));
}

TEST_CASE("under-identified family is rejected") {
  const Eigen::VectorXd x = test::white_noise(64, 1.0, 2);
  WvEstimate wv = empirical_wv(modwt_haar(
      std::span<const double>(x.data(), x.size()), 2));
  wv.omega = default_omega(wv);
  CHECK_THROWS_AS(
      gmwm_fit(wv, {NoiseType::power_law, NoiseType::white}), Error);
}

TEST_CASE("moment start lands near a pure power-law truth") {
  StochasticModel truth({PowerLaw{10.0, 0.4}});
  WvEstimate wv;
  wv.nu_hat = theoretical_wv_closed_form(truth, 8);
  wv.scales.resize(8);
  wv.counts.resize(8);
  for (int j = 0; j < 8; ++j) {
    wv.scales[j] = std::pow(2.0, j + 1);
    wv.counts[j] = 4096;
  }
  const StochasticModel start = moment_start(wv, {NoiseType::power_law});
  const auto* pl = std::get_if<PowerLaw>(&start.components()[0]);
  REQUIRE(pl != nullptr);
  CHECK(pl->d > 0.2);  // slope initialization sees the long memory
}

// ---------------------------------------------------------------------------

namespace {

TimeSeries nominal_series(int n, unsigned seed, double b = 5.0) {
  ScenarioConfig config;
  config.years = n / kDaysPerYear;
  config.trend_mm_per_year = b;
  config.n_reps = 1;
  config.seed = seed;
  return simulate_series(config, 0).first;
}

FunctionalSpec nominal_spec() {
  FunctionalSpec spec;
  spec.reference_epoch = 51544.0;
  spec.harmonic_frequencies = {1.0};
  return spec;
}

}  // namespace

TEST_CASE("gmwmx validates the iteration count") {
  const TimeSeries series = nominal_series(256, 1);
  GmwmxOptions options;
  options.iterations = 3;
  CHECK_THROWS_AS(
      gmwmx_estimate(series, nominal_spec(), {NoiseType::white}, options), Error);
}

TEST_CASE("gmwmx equivariance under mean shifts") {
  const TimeSeries base = nominal_series(512, 7);
  const FunctionalSpec spec = nominal_spec();
  const DesignMatrix design = build_design_matrix(base.epochs, spec);
  Eigen::VectorXd delta(4);
  delta << 10.0, -3.0, 0.5, 1.5;

  TimeSeries shifted = base;
  const Eigen::VectorXd extra = design.entries * delta;
  for (std::size_t i = 0; i < shifted.values.size(); ++i) {
    shifted.values[i] += extra[static_cast<Eigen::Index>(i)];
  }

  const ModelFamily family = {NoiseType::power_law, NoiseType::white};
  for (int iterations : {1, 2}) {
    GmwmxOptions options;
    options.iterations = iterations;
    const EstimationResult a = gmwmx_estimate(base, spec, family, options);
    const EstimationResult b = gmwmx_estimate(shifted, spec, family, options);
    CHECK((b.x_hat - a.x_hat - delta).norm() <= 1e-8 * (1.0 + delta.norm()));
    CHECK((b.model_hat.parameters() - a.model_hat.parameters()).norm() <=
          1e-10 * (1.0 + a.model_hat.parameters().norm()));
  }
}

TEST_CASE("gmwmx scale equivariance") {
  const TimeSeries base = nominal_series(512, 13);
  TimeSeries scaled = base;
  const double k = 2.5;
  for (auto& v : scaled.values) v *= k;

  const ModelFamily family = {NoiseType::power_law, NoiseType::white};
  const EstimationResult a = gmwmx_estimate(base, nominal_spec(), family);
  const EstimationResult b = gmwmx_estimate(scaled, nominal_spec(), family);
  CHECK((b.x_hat - k * a.x_hat).norm() <= 1e-6 * (1.0 + a.x_hat.norm()));

  const auto* pl_a = std::get_if<PowerLaw>(&a.model_hat.components()[0]);
  const auto* pl_b = std::get_if<PowerLaw>(&b.model_hat.components()[0]);
  CHECK(pl_b->sigma2 ==
        doctest::Approx(k * k * pl_a->sigma2).epsilon(5e-3));
  CHECK(pl_b->d == doctest::Approx(pl_a->d).epsilon(1e-4));
}

TEST_CASE("with scalar covariance the second iteration is idle") {
  const TimeSeries series = [&] {
    ScenarioConfig config;
    config.years = 512 / kDaysPerYear;
    config.noise_truth = StochasticModel({WhiteNoise{15.0}});
    config.seed = 31;
    return simulate_series(config, 0).first;
  }();
  GmwmxOptions one, two;
  one.iterations = 1;
  two.iterations = 2;
  const EstimationResult a =
      gmwmx_estimate(series, nominal_spec(), {NoiseType::white}, one);
  const EstimationResult b =
      gmwmx_estimate(series, nominal_spec(), {NoiseType::white}, two);
  CHECK((a.x_hat - b.x_hat).norm() <= 1e-8 * (1.0 + a.x_hat.norm()));
  CHECK(b.objective_trace.size() == 2);
  CHECK(a.objective_trace.size() == 1);
}

TEST_CASE("gaps drop regression rows but keep the wv grid") {
  TimeSeries series = nominal_series(400, 3);
  std::mt19937_64 rng(55);
  series = apply_gaps(series, 0.05, rng);
  const EstimationResult result =
      gmwmx_estimate(series, nominal_spec(), {NoiseType::power_law, NoiseType::white});
  CHECK(result.gap_fraction > 0.0);
  CHECK(result.gap_fraction < 0.06);
  CHECK(result.x_hat.size() == 4);
}

TEST_CASE("confidence interval quantiles") {
  const auto [lo, hi] = confidence_interval(0.0, 1.0, 0.05);
  CHECK(lo == doctest::Approx(-1.95996).epsilon(1e-5));
  CHECK(hi == doctest::Approx(1.95996).epsilon(1e-5));

  const auto [l1, h1] = confidence_interval(0.0, 2.0, 0.3173);
  CHECK(h1 == doctest::Approx(2.0).epsilon(1e-4));  // one-sigma half width

  CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 0.7), Error);
  CHECK_THROWS_AS(confidence_interval(0.0, 0.0, 0.05), Error);
}

TEST_CASE("nominal quantile value") {
  CHECK(normal_quantile(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
}
