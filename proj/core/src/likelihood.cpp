#include "gmwmx/likelihood.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gmwmx/errors.hpp"
#include "gmwmx/linalg.hpp"

namespace gmwmx {

namespace {

using Clock = std::chrono::steady_clock;

void check_cap(Eigen::Index n, int max_n) {
  if (n > max_n) {
    throw Error(ErrorKind::size_cap,
                "likelihood oracle is capped at n = " + std::to_string(max_n) +
                    " (got " + std::to_string(n) +
                    "); it exists for validation, use gmwmx1/gmwmx2 for "
                    "production runs or raise the cap explicitly");
  }
}

double logit(double x) { return std::log(x / (1.0 - x)); }
double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Shape/ratio parameterization with the variance of the first component
// concentrated out: Sigma = s [ R_0(shape) + sum_c r_c R_c(shape) ].
class ProfileTransform {
 public:
  explicit ProfileTransform(ModelFamily family) : family_(std::move(family)) {
    dimension_ = parameter_count(family_) - 1;
  }

  int dimension() const { return dimension_; }

  StochasticModel to_unit_model(const Eigen::VectorXd& u) const {
    std::vector<NoiseComponent> components;
    Eigen::Index i = 0;
    bool first = true;
    for (NoiseType t : family_) {
      double variance = 1.0;
      if (!first) {
        variance = std::exp(std::clamp(u[i++], -60.0, 60.0));  // ratio
      }
      switch (t) {
        case NoiseType::white:
          components.push_back(WhiteNoise{variance});
          break;
        case NoiseType::power_law: {
          const double d = PowerLaw::kMinD +
                           (PowerLaw::kMaxD - PowerLaw::kMinD) * sigmoid(u[i++]);
          components.push_back(PowerLaw{variance, d});
          break;
        }
        case NoiseType::matern: {
          const double lambda =
              Matern::kMinLambda +
              (Matern::kMaxLambda - Matern::kMinLambda) * sigmoid(u[i++]);
          const double nu =
              Matern::kMinSmoothness +
              (Matern::kMaxSmoothness - Matern::kMinSmoothness) *
                  sigmoid(u[i++]);
          components.push_back(Matern{variance, lambda, nu});
          break;
        }
      }
      first = false;
    }
    return StochasticModel(std::move(components));
  }

  Eigen::VectorXd from_model(const StochasticModel& model) const {
    Eigen::VectorXd u(dimension_);
    Eigen::Index i = 0;
    bool first = true;
    double scale = 1.0;
    for (const auto& c : model.components()) {
      double variance = 0.0;
      if (const auto* w = std::get_if<WhiteNoise>(&c)) variance = w->sigma2;
      if (const auto* p = std::get_if<PowerLaw>(&c)) variance = p->sigma2;
      if (const auto* m = std::get_if<Matern>(&c)) variance = m->sigma2;
      if (first) {
        scale = variance;
      } else {
        u[i++] = std::log(variance / scale);
      }
      if (const auto* p = std::get_if<PowerLaw>(&c)) {
        const double t = (std::clamp(p->d, PowerLaw::kMinD * 1.0000001,
                                     PowerLaw::kMaxD * 0.9999999) -
                          PowerLaw::kMinD) /
                         (PowerLaw::kMaxD - PowerLaw::kMinD);
        u[i++] = logit(t);
      } else if (const auto* m = std::get_if<Matern>(&c)) {
        u[i++] = logit((std::clamp(m->lambda, Matern::kMinLambda * 1.001,
                                   Matern::kMaxLambda * 0.999) -
                        Matern::kMinLambda) /
                       (Matern::kMaxLambda - Matern::kMinLambda));
        u[i++] = logit((std::clamp(m->smoothness, Matern::kMinSmoothness * 1.001,
                                   Matern::kMaxSmoothness * 0.999) -
                        Matern::kMinSmoothness) /
                       (Matern::kMaxSmoothness - Matern::kMinSmoothness));
      }
      first = false;
    }
    return u;
  }

  StochasticModel scaled_model(const Eigen::VectorXd& u, double scale) const {
    const StochasticModel unit = to_unit_model(u);
    Eigen::VectorXd gamma = unit.parameters();
    Eigen::Index i = 0;
    for (NoiseType t : family_) {
      gamma[i] *= scale;  // every leading component parameter is a variance
      i += parameter_count(t);
    }
    return StochasticModel::from_parameters(family_, gamma);
  }

 private:
  ModelFamily family_;
  int dimension_ = 0;
};

struct ConcentratedFit {
  double negative_loglik = std::numeric_limits<double>::infinity();
  double scale = 0.0;  // profiled variance of the first component
  Eigen::VectorXd x;
  Eigen::MatrixXd x_cov;  // (A^T Sigma^-1 A)^-1 at the profiled scale
  bool boundary = false;
};

// Whiten with the unit-scale covariance, concentrate x by least squares and
// the overall scale in closed form. The covariance buffer and its in-place
// factorization are reused across optimizer iterates: at n = 2048 the
// Cholesky dominates and a fresh 32 MB allocation per evaluation is pure
// overhead.
ConcentratedFit concentrated_fit(const Eigen::VectorXd& y,
                                 const DesignMatrix& design,
                                 const StochasticModel& unit_model,
                                 bool want_covariance) {
  const Eigen::Index n = y.size();
  ConcentratedFit fit;

  thread_local Eigen::MatrixXd sigma_buffer;
  sigma_buffer.resize(n, n);
  const auto pos = integer_grid_positions(
      std::span<const double>(design.epochs.data(),
                              static_cast<std::size_t>(design.epochs.size())));
  const Eigen::VectorXd table =
      unit_model.autocovariances(static_cast<long>(pos.back()));
  if (pos.back() == static_cast<std::ptrdiff_t>(n) - 1) {
    // complete grid: column j of the lower triangle is table[0 .. n-1-j]
    for (Eigen::Index j = 0; j < n; ++j) {
      sigma_buffer.col(j).tail(n - j) = table.head(n - j);
    }
  } else {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j; i < n; ++i) {
        sigma_buffer(i, j) = table[pos[static_cast<std::size_t>(i)] -
                                   pos[static_cast<std::size_t>(j)]];
      }
    }
  }

  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(sigma_buffer);  // in place
  if (llt.info() != Eigen::Success) return fit;  // +inf: outside the PD region

  const auto lt = sigma_buffer.triangularView<Eigen::Lower>();
  thread_local Eigen::MatrixXd whitened;
  whitened.resize(n, design.cols() + 1);
  whitened.leftCols(design.cols()) = design.entries;
  whitened.col(design.cols()) = y;
  lt.solveInPlace(whitened);
  const auto a_white = whitened.leftCols(design.cols());
  const auto y_white = whitened.col(design.cols());

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_white);
  if (qr.rank() < design.cols()) return fit;
  fit.x = qr.solve(y_white);
  const double rss = (y_white - a_white * fit.x).squaredNorm();
  const double log_det_unit =
      sigma_buffer.diagonal().array().log().sum();  // factor lives in place

  fit.scale = rss / static_cast<double>(n);
  const double mean_square = y_white.squaredNorm() / static_cast<double>(n);
  if (fit.scale <= 1e-16 * std::max(mean_square, 1e-300)) {
    // Exact interpolation: the likelihood is unbounded at the boundary.
    fit.boundary = true;
    fit.scale = 0.0;
    fit.negative_loglik = -std::numeric_limits<double>::infinity();
  } else {
    fit.negative_loglik =
        0.5 * static_cast<double>(n) *
            (std::log(2.0 * std::numbers::pi * fit.scale) + 1.0) +
        log_det_unit;
  }

  if (want_covariance) {
    const Eigen::Index p = design.cols();
    Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p);
    Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd inv_permuted = rinv * rinv.transpose();
    fit.x_cov = fit.scale * (qr.colsPermutation() * inv_permuted *
                             qr.colsPermutation().transpose());
  }
  return fit;
}

}  // namespace

double gaussian_loglik(const Eigen::VectorXd& y, const DesignMatrix& design,
                       const Eigen::VectorXd& x, const StochasticModel& model,
                       int max_n) {
  check_cap(y.size(), max_n);
  if (y.size() != design.rows() || x.size() != design.cols()) {
    throw Error(ErrorKind::invalid_argument, "gaussian_loglik: size mismatch");
  }
  const Eigen::MatrixXd sigma = model.covariance_matrix(
      std::span<const double>(design.epochs.data(),
                              static_cast<std::size_t>(design.epochs.size())));
  const Eigen::MatrixXd l = cholesky_lower(sigma);
  const Eigen::VectorXd residual = y - design.entries * x;
  const Eigen::VectorXd whitened =
      l.triangularView<Eigen::Lower>().solve(residual);
  const double log_det = l.diagonal().array().log().sum();
  const auto n = static_cast<double>(y.size());
  return -0.5 * whitened.squaredNorm() - log_det -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

EstimationResult mle_fit(const TimeSeries& series, const FunctionalSpec& spec,
                         const ModelFamily& family, const MleOptions& options) {
  series.validate();
  const auto t_total = Clock::now();
  check_cap(static_cast<Eigen::Index>(series.size()), options.max_n);

  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      series.values.data(), static_cast<Eigen::Index>(series.values.size()));
  const DesignMatrix design = build_design_matrix(series.epochs, spec);

  // Moment-based warm start from the OLS residuals.
  const OlsFit ols_fit = ols(y, design);
  WvEstimate wv = wv_of_residuals(
      series.epochs,
      std::span<const double>(ols_fit.residuals.data(),
                              static_cast<std::size_t>(ols_fit.residuals.size())),
      0, OmegaKind::plugin);
  StochasticModel start = moment_start(wv, family);
  if (options.init_from_gmwm && parameter_count(family) <= wv.nu_hat.size()) {
    GmwmOptions warm;
    warm.starts = 3;
    start = gmwm_fit(wv, family, warm).model;
  }

  const ProfileTransform transform(family);
  ConcentratedFit best;
  Eigen::VectorXd u_best = Eigen::VectorXd::Zero(transform.dimension());
  bool converged = true;
  int evaluations = 0;

  if (transform.dimension() == 0) {
    best = concentrated_fit(y, design, transform.to_unit_model(u_best), true);
    evaluations = 1;
  } else {
    auto objective = [&](const Eigen::VectorXd& u) {
      return concentrated_fit(y, design, transform.to_unit_model(u), false)
          .negative_loglik;
    };
    SimplexResult run = minimize_simplex(
        objective, transform.from_model(start), options.simplex);
    // polish restart: a fresh small simplex escapes flat-spread stops
    SimplexOptions polish = options.simplex;
    polish.initial_step = 0.05;
    polish.max_evaluations = options.simplex.max_evaluations / 2;
    const SimplexResult polished = minimize_simplex(objective, run.x, polish);
    evaluations = run.evaluations + polished.evaluations;
    if (polished.value <= run.value) {
      converged = polished.converged;
      run = polished;
    } else {
      converged = run.converged;
    }
    u_best = run.x;
    best = concentrated_fit(y, design, transform.to_unit_model(u_best), true);
  }

  EstimationResult result;
  result.alpha = options.alpha;
  result.iterations = 1;
  result.optimizer_converged = converged;
  result.objective_trace.push_back(best.negative_loglik);
  result.loglik = -best.negative_loglik;

  // A boundary fit keeps a representable (tiny) variance but is flagged.
  const double scale = best.boundary ? 1e-300 : best.scale;
  result.model_hat = transform.scaled_model(u_best, scale);
  result.gamma_labels = result.model_hat.parameter_labels();
  result.wv_model =
      theoretical_wv_closed_form(result.model_hat,
                                 static_cast<int>(wv.nu_hat.size()));

  result.x_hat = best.x;
  result.x_labels = design.column_labels;
  result.x_units = design.column_units;
  result.x_cov = best.x_cov;
  result.wv = wv;

  result.x_sigma.resize(result.x_hat.size());
  for (Eigen::Index i = 0; i < result.x_hat.size(); ++i) {
    result.x_sigma[i] = std::sqrt(std::max(result.x_cov(i, i), 0.0));
    result.ci.push_back(result.x_sigma[i] > 0.0
                            ? confidence_interval(result.x_hat[i],
                                                  result.x_sigma[i],
                                                  options.alpha)
                            : std::make_pair(result.x_hat[i], result.x_hat[i]));
  }
  if (best.boundary) {
    result.warnings.push_back(
        "profiled noise variance hit the zero boundary (exact interpolation)");
  }
  if (!converged) {
    result.warnings.push_back(
        "likelihood search stopped at the evaluation budget");
  }
  result.optimizer_evaluations = evaluations;
  result.timing_seconds["total"] = std::chrono::duration<double>(
                                       Clock::now() - t_total).count();
  return result;
}

EfficiencyGap efficiency_gap(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& sigma) {
  const auto n = static_cast<double>(a.rows());
  const Eigen::MatrixXd xtx_inv = spd_inverse(a.transpose() * a);
  const Eigen::MatrixXd sigma_inv = spd_inverse(sigma);
  const Eigen::MatrixXd info_inv = spd_inverse(a.transpose() * sigma_inv * a);

  const Eigen::MatrixXd v_star =
      n * xtx_inv * a.transpose() * sigma * a * xtx_inv;
  const Eigen::MatrixXd v = n * info_inv;

  EfficiencyGap gap;
  gap.difference = v_star - v;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (gap.difference + gap.difference.transpose()));
  gap.min_eigenvalue = es.eigenvalues().minCoeff();

  const Eigen::MatrixXd sigma_inv_sqrt = spd_inv_sqrt(sigma);
  const Eigen::MatrixXd b =
      sigma_inv_sqrt * a * info_inv * a.transpose() * sigma_inv_sqrt;
  gap.idempotency_gap = (b * b - b).norm();
  return gap;
}

}  // namespace gmwmx
