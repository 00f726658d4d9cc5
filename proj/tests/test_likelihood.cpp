#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "gmwmx/errors.hpp"
#include "gmwmx/likelihood.hpp"
#include "gmwmx/simulation.hpp"
#include "test_helpers.hpp"

using namespace gmwmx;

namespace {

// Naive dense oracle: explicit inverse and determinant, nothing shared with
// the production path.
double naive_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                    const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma) {
  const Eigen::VectorXd r = y - a * x;
  const Eigen::MatrixXd inv = sigma.inverse();
  const double quad = r.dot(inv * r);
  const double logdet = std::log(sigma.determinant());
  const auto n = static_cast<double>(y.size());
  return -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

DesignMatrix small_design(int n) {
  FunctionalSpec spec;
  spec.harmonic_frequencies = {};
  return build_design_matrix(test::daily_epochs(n), spec);
}

}  // namespace

TEST_CASE("identity covariance reduces to the residual sum of squares") {
  const int n = 40;
  const DesignMatrix design = small_design(n);
  const Eigen::VectorXd y = test::white_noise(n, 1.0, 5);
  const Eigen::VectorXd x = Eigen::Vector2d(0.1, -0.4);
  StochasticModel unit({WhiteNoise{1.0}});
  const double expected = -0.5 * n * std::log(2.0 * std::numbers::pi) -
                          0.5 * (y - design.entries * x).squaredNorm();
  CHECK(gaussian_loglik(y, design, x, unit) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("matches the naive dense oracle on a 16-point composite model") {
  const int n = 16;
  const DesignMatrix design = small_design(n);
  Eigen::VectorXd y = test::white_noise(n, 4.0, 71);
  const Eigen::VectorXd x = Eigen::Vector2d(1.0, 3.0);
  StochasticModel model({PowerLaw{10.0, 0.4}, WhiteNoise{15.0}});
  const Eigen::MatrixXd sigma =
      model.covariance_matrix(test::daily_epochs(n));
  CHECK(gaussian_loglik(y, design, x, model) ==
        doctest::Approx(naive_loglik(y, design.entries, x, sigma))
            .epsilon(1e-9));
}

TEST_CASE("loglik is invariant under simultaneous permutation") {
  const int n = 12;
  const DesignMatrix design = small_design(n);
  const Eigen::VectorXd y = test::white_noise(n, 2.0, 13);
  const Eigen::VectorXd x = Eigen::Vector2d(0.5, 1.5);
  StochasticModel model({PowerLaw{5.0, 0.3}, WhiteNoise{3.0}});
  const Eigen::MatrixXd sigma =
      model.covariance_matrix(test::daily_epochs(n));

  std::mt19937_64 rng(3);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  perm.setIdentity();
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    perm.applyTranspositionOnTheRight(i, pick(rng));
  }
  const Eigen::MatrixXd pa = perm * design.entries;
  const Eigen::VectorXd py = perm * y;
  const Eigen::MatrixXd psigma = perm * sigma * perm.transpose();
  CHECK(naive_loglik(py, pa, x, psigma) ==
        doctest::Approx(naive_loglik(y, design.entries, x, sigma))
            .epsilon(1e-10));
}

TEST_CASE("the size cap refuses production-sized inputs") {
  const int n = 32;
  const DesignMatrix design = small_design(n);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  StochasticModel unit({WhiteNoise{1.0}});
  try {
    gaussian_loglik(y, design, Eigen::Vector2d(0, 0), unit, /*max_n=*/16);
    FAIL("expected size cap");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::size_cap);
  }
}

TEST_CASE("mle on noiseless data recovers exactly and flags the boundary") {
  const int n = 64;
  FunctionalSpec spec;
  spec.harmonic_frequencies = {};
  const auto epochs = test::daily_epochs(n);
  const DesignMatrix design = build_design_matrix(epochs, spec);
  const Eigen::VectorXd truth = Eigen::Vector2d(4.0, -2.0);
  const TimeSeries series =
      test::make_series(epochs, design.entries * truth);

  const EstimationResult fit = mle_fit(series, spec, {NoiseType::white});
  CHECK((fit.x_hat - truth).norm() <= 1e-10 * truth.norm());
  REQUIRE(!fit.warnings.empty());
  CHECK(fit.warnings[0].find("boundary") != std::string::npos);
}

TEST_CASE("white-only mle variance is rss/n") {
  const int n = 256;
  FunctionalSpec spec;
  spec.harmonic_frequencies = {};
  const auto epochs = test::daily_epochs(n);
  const DesignMatrix design = build_design_matrix(epochs, spec);
  Eigen::VectorXd y = test::white_noise(n, 9.0, 123);
  y += design.entries * Eigen::Vector2d(1.0, 5.0);
  const TimeSeries series = test::make_series(epochs, y);

  const EstimationResult fit = mle_fit(series, spec, {NoiseType::white});
  const OlsFit reference = ols(y, design);
  const double rss_over_n = reference.residuals.squaredNorm() / n;
  const auto* wn = std::get_if<WhiteNoise>(&fit.model_hat.components()[0]);
  REQUIRE(wn != nullptr);
  CHECK(wn->sigma2 == doctest::Approx(rss_over_n).epsilon(1e-10));
  CHECK((fit.x_hat - reference.x).norm() <= 1e-10 * (1.0 + reference.x.norm()));
}

TEST_CASE("concentrated path agrees with a joint direct search") {
  // white family on an 8-point instance: profile vs joint simplex over
  // (x, log sigma2)
  const int n = 8;
  FunctionalSpec spec;
  spec.harmonic_frequencies = {};
  spec.reference_epoch = 51544.0;  // keep the trend column well conditioned
  const auto epochs = test::daily_epochs(n);
  const DesignMatrix design = build_design_matrix(epochs, spec);
  Eigen::VectorXd y(n);
  y << 0.3, 1.1, 0.4, 1.9, 2.2, 1.5, 2.9, 2.4;
  const TimeSeries series = test::make_series(epochs, y);

  const EstimationResult profiled = mle_fit(series, spec, {NoiseType::white});

  auto negative_joint = [&](const Eigen::VectorXd& u) {
    StochasticModel model({WhiteNoise{std::exp(u[2])}});
    return -gaussian_loglik(y, design, u.head(2), model);
  };
  Eigen::VectorXd start(3);
  start << 0.0, 0.0, 0.0;
  SimplexOptions options;
  options.relative_tolerance = 1e-13;
  options.max_evaluations = 5000;
  SimplexResult joint = minimize_simplex(negative_joint, start, options);
  for (double step : {0.05, 0.005}) {  // polish with restarted simplexes
    options.initial_step = step;
    joint = minimize_simplex(negative_joint, joint.x, options);
  }

  CHECK(std::abs(joint.x[0] - profiled.x_hat[0]) <= 1e-4);
  CHECK(std::abs(joint.x[1] - profiled.x_hat[1]) <= 1e-4);
  const auto* wn = std::get_if<WhiteNoise>(&profiled.model_hat.components()[0]);
  CHECK(std::abs(std::exp(joint.x[2]) - wn->sigma2) <= 1e-4);
}

TEST_CASE("profile and joint search agree on a composite model") {
  ScenarioConfig config;
  config.years = 128 / kDaysPerYear;
  config.seed = 88;
  config.noise_truth = StochasticModel({PowerLaw{10.0, 0.4}, WhiteNoise{15.0}});
  auto [series, truth] = simulate_series(config, 0);

  FunctionalSpec spec;
  spec.reference_epoch = config.start_epoch_mjd;
  spec.harmonic_frequencies = {1.0};
  const DesignMatrix design = build_design_matrix(series.epochs, spec);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      series.values.data(), static_cast<Eigen::Index>(series.size()));

  MleOptions options;
  options.simplex.relative_tolerance = 1e-11;
  options.simplex.max_evaluations = 2000;
  const EstimationResult profiled =
      mle_fit(series, spec, {NoiseType::power_law, NoiseType::white}, options);

  // joint search over (x, log s2_pl, logit d, log s2_w), started at the
  // profiled solution: it must not find anything meaningfully better
  auto negative_joint = [&](const Eigen::VectorXd& u) {
    const double d = 1e-4 + (0.5 - 2e-4) / (1.0 + std::exp(-u[design.cols() + 1]));
    StochasticModel model(
        {PowerLaw{std::exp(u[design.cols()]), d},
         WhiteNoise{std::exp(u[design.cols() + 2])}});
    return -gaussian_loglik(y, design, u.head(design.cols()), model);
  };
  const Eigen::VectorXd gamma = profiled.model_hat.parameters();
  Eigen::VectorXd start(design.cols() + 3);
  start.head(design.cols()) = profiled.x_hat;
  start[design.cols()] = std::log(gamma[0]);
  start[design.cols() + 1] = std::log((gamma[1] - 1e-4) / (0.5 - 1e-4 - gamma[1]));
  start[design.cols() + 2] = std::log(gamma[2]);

  SimplexOptions joint_options;
  joint_options.relative_tolerance = 1e-12;
  joint_options.max_evaluations = 8000;
  joint_options.initial_step = 0.05;
  const SimplexResult joint =
      minimize_simplex(negative_joint, start, joint_options);
  CHECK(-joint.value <= *profiled.loglik + 5e-3);
  CHECK((joint.x.head(design.cols()) - profiled.x_hat).norm() <= 5e-3);
}

TEST_CASE("efficiency gap vanishes for proportional covariance") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(20, 3);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = normal(rng);
  }
  const EfficiencyGap gap =
      efficiency_gap(a, 3.7 * Eigen::MatrixXd::Identity(20, 20));
  CHECK(std::abs(gap.min_eigenvalue) <= 1e-10);
  CHECK(gap.difference.norm() <= 1e-8);
  CHECK(gap.idempotency_gap <= 1e-8);
}

TEST_CASE("efficiency gap is positive semidefinite on ar(1) draws") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phi_dist(0.2, 0.95);
  for (int draw = 0; draw < 20; ++draw) {
    Eigen::MatrixXd a(20, 3);
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 3; ++j) a(i, j) = normal(rng);
    }
    const double phi = phi_dist(rng);
    Eigen::MatrixXd sigma(20, 20);
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) sigma(i, j) = std::pow(phi, std::abs(i - j));
    }
    const EfficiencyGap gap = efficiency_gap(a, sigma);
    CHECK(gap.min_eigenvalue >= -1e-8);
    CHECK(gap.idempotency_gap <= 1e-8);
  }
}
