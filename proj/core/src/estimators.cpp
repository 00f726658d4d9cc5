#include "gmwmx/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <boost/math/distributions/normal.hpp>

#include <chrono>
#include <cmath>
#include <string>

#include "gmwmx/errors.hpp"
#include "gmwmx/linalg.hpp"

namespace gmwmx {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// (R^T R)^-1 from the R factor of a column-pivoted QR, permuted back.
Eigen::MatrixXd xtx_inverse_from_qr(
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
  const Eigen::Index p = qr.matrixR().cols();
  Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p);
  Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd inv_permuted = rinv * rinv.transpose();
  return qr.colsPermutation() * inv_permuted *
         qr.colsPermutation().transpose();
}

void check_conformable(const Eigen::VectorXd& y, const DesignMatrix& design) {
  if (y.size() != design.rows()) {
    throw Error(ErrorKind::invalid_argument,
                "observation vector length " + std::to_string(y.size()) +
                    " does not match " + std::to_string(design.rows()) +
                    " design rows");
  }
}

bool is_complete_grid(const std::vector<std::ptrdiff_t>& pos) {
  return pos.back() == static_cast<std::ptrdiff_t>(pos.size()) - 1;
}

double logit(double x) { return std::log(x / (1.0 - x)); }
double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double box_to_u(double value, double lo, double hi) {
  return logit((value - lo) / (hi - lo));
}
double u_to_box(double u, double lo, double hi) {
  return lo + (hi - lo) * sigmoid(u);
}

constexpr double kLogClamp = 60.0;

double log_to_u(double value) { return std::log(value); }
double u_to_positive(double u) {
  return std::exp(std::clamp(u, -kLogClamp, kLogClamp));
}

// Process variance of a unit-innovation fractionally differenced component.
double fd_variance_ratio(double d) {
  return std::exp(std::lgamma(1.0 - 2.0 * d) - 2.0 * std::lgamma(1.0 - d));
}

}  // namespace

// ---------------------------------------------------------------------------

OlsFit ols(const Eigen::VectorXd& y, const DesignMatrix& design) {
  check_conformable(y, design);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.entries);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorKind::rank_deficient,
                "ols: design matrix is rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " +
                    std::to_string(design.cols()) + ")");
  }
  OlsFit fit;
  fit.x = qr.solve(y);
  fit.residuals = y - design.entries * fit.x;
  fit.xtx_inverse = xtx_inverse_from_qr(qr);
  return fit;
}

GlsFit gls(const Eigen::VectorXd& y, const DesignMatrix& design,
           const Eigen::MatrixXd& sigma) {
  check_conformable(y, design);
  if (sigma.rows() != y.size() || sigma.cols() != y.size()) {
    throw Error(ErrorKind::invalid_argument, "gls: Sigma is not conformable");
  }
  const Eigen::MatrixXd l = cholesky_lower(sigma);
  const auto lt = l.triangularView<Eigen::Lower>();
  Eigen::MatrixXd a_white = lt.solve(design.entries);
  Eigen::VectorXd y_white = lt.solve(y);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_white);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorKind::rank_deficient, "gls: whitened design lost rank");
  }
  GlsFit fit;
  fit.x = qr.solve(y_white);
  fit.residuals = y - design.entries * fit.x;
  fit.x_cov = xtx_inverse_from_qr(qr);
  return fit;
}

GlsFit gls_toeplitz(const Eigen::VectorXd& y, const DesignMatrix& design,
                    const Eigen::VectorXd& acov_first_column) {
  check_conformable(y, design);
  const Eigen::Index n = y.size();
  const Eigen::Index p = design.cols();
  if (acov_first_column.size() != n) {
    throw Error(ErrorKind::invalid_argument,
                "gls_toeplitz: autocovariance column must have n entries");
  }
  Eigen::MatrixXd rhs(n, p + 1);
  rhs.leftCols(p) = design.entries;
  rhs.col(p) = y;
  const Eigen::MatrixXd solved = toeplitz_solve(acov_first_column, rhs);

  const Eigen::MatrixXd info =
      design.entries.transpose() * solved.leftCols(p);  // A^T Sigma^-1 A
  const Eigen::VectorXd score = design.entries.transpose() * solved.col(p);

  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (info + info.transpose()));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::not_positive_definite,
                "gls_toeplitz: A^T Sigma^-1 A is not positive definite");
  }
  GlsFit fit;
  fit.x = llt.solve(score);
  fit.residuals = y - design.entries * fit.x;
  fit.x_cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
  return fit;
}

GlsFit gls_auto(const Eigen::VectorXd& y, const DesignMatrix& design,
                const StochasticModel& model) {
  const auto pos = integer_grid_positions(
      std::span<const double>(design.epochs.data(),
                              static_cast<std::size_t>(design.epochs.size())));
  if (is_complete_grid(pos)) {
    return gls_toeplitz(y, design,
                        model.autocovariances(static_cast<long>(pos.back())));
  }
  return gls(y, design,
             model.covariance_matrix(std::span<const double>(
                 design.epochs.data(),
                 static_cast<std::size_t>(design.epochs.size()))));
}

// ---------------------------------------------------------------------------

FamilyTransform::FamilyTransform(ModelFamily family)
    : family_(std::move(family)) {
  if (family_.empty()) {
    throw Error(ErrorKind::invalid_argument, "empty model family");
  }
  dimension_ = parameter_count(family_);
}

Eigen::VectorXd FamilyTransform::to_unconstrained(
    const StochasticModel& model) const {
  if (model.family() != family_) {
    throw Error(ErrorKind::invalid_argument,
                "model does not belong to this family");
  }
  Eigen::VectorXd u(dimension_);
  Eigen::Index i = 0;
  for (const auto& c : model.components()) {
    if (const auto* w = std::get_if<WhiteNoise>(&c)) {
      u[i++] = log_to_u(w->sigma2);
    } else if (const auto* pl = std::get_if<PowerLaw>(&c)) {
      u[i++] = log_to_u(pl->sigma2);
      u[i++] = box_to_u(std::clamp(pl->d, PowerLaw::kMinD * 1.0000001,
                                   PowerLaw::kMaxD * 0.9999999),
                        PowerLaw::kMinD, PowerLaw::kMaxD);
    } else if (const auto* m = std::get_if<Matern>(&c)) {
      u[i++] = log_to_u(m->sigma2);
      u[i++] = box_to_u(std::clamp(m->lambda, Matern::kMinLambda * 1.001,
                                   Matern::kMaxLambda * 0.999),
                        Matern::kMinLambda, Matern::kMaxLambda);
      u[i++] = box_to_u(std::clamp(m->smoothness, Matern::kMinSmoothness * 1.001,
                                   Matern::kMaxSmoothness * 0.999),
                        Matern::kMinSmoothness, Matern::kMaxSmoothness);
    }
  }
  return u;
}

StochasticModel FamilyTransform::to_model(const Eigen::VectorXd& u) const {
  if (u.size() != dimension_) {
    throw Error(ErrorKind::invalid_argument, "transform dimension mismatch");
  }
  std::vector<NoiseComponent> components;
  Eigen::Index i = 0;
  for (NoiseType t : family_) {
    switch (t) {
      case NoiseType::white:
        components.push_back(WhiteNoise{u_to_positive(u[i])});
        i += 1;
        break;
      case NoiseType::power_law:
        components.push_back(
            PowerLaw{u_to_positive(u[i]),
                     u_to_box(u[i + 1], PowerLaw::kMinD, PowerLaw::kMaxD)});
        i += 2;
        break;
      case NoiseType::matern:
        components.push_back(Matern{
            u_to_positive(u[i]),
            u_to_box(u[i + 1], Matern::kMinLambda, Matern::kMaxLambda),
            u_to_box(u[i + 2], Matern::kMinSmoothness, Matern::kMaxSmoothness)});
        i += 3;
        break;
    }
  }
  return StochasticModel(std::move(components));
}

StochasticModel moment_start(const WvEstimate& wv, const ModelFamily& family) {
  const Eigen::Index levels = wv.nu_hat.size();
  if (levels == 0) {
    throw Error(ErrorKind::invalid_argument, "moment_start: empty WV");
  }
  const Eigen::ArrayXd level_var = wv.nu_hat.array() * wv.scales.array();

  const bool has_white =
      std::count(family.begin(), family.end(), NoiseType::white) > 0;
  const long n_memory = static_cast<long>(family.size()) - (has_white ? 1 : 0);

  double white0 = has_white ? std::max(level_var[0], 1e-12) : 0.0;
  if (has_white && n_memory == 0) white0 = std::max(level_var.mean(), 1e-12);

  double memory0 = 0.0;
  if (n_memory > 0) {
    memory0 = std::max((level_var - white0).max(0.0).mean(),
                       std::max(0.1 * white0, 1e-12));
    memory0 /= static_cast<double>(n_memory);
  }

  // Memory parameter from the log-log slope of nu_hat over the largest
  // scales: a pure power-law has nu_j ~ tau_j^(2d-1).
  double d0 = 0.25;
  const Eigen::Index tail = std::min<Eigen::Index>(3, levels);
  if (tail >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (Eigen::Index j = levels - tail; j < levels; ++j) {
      const double x = std::log(wv.scales[j]);
      const double y = std::log(std::max(wv.nu_hat[j], 1e-300));
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double npts = static_cast<double>(tail);
    const double slope = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
    d0 = std::clamp(0.5 * (slope + 1.0), 0.05, 0.45);
  }

  std::vector<NoiseComponent> components;
  for (NoiseType t : family) {
    switch (t) {
      case NoiseType::white:
        components.push_back(WhiteNoise{white0});
        break;
      case NoiseType::power_law:
        components.push_back(PowerLaw{memory0 / fd_variance_ratio(d0), d0});
        break;
      case NoiseType::matern: {
        const double lambda0 =
            std::clamp(2.0 / wv.scales[levels - 1], Matern::kMinLambda * 2.0,
                       Matern::kMaxLambda * 0.5);
        components.push_back(Matern{memory0, lambda0, 0.5});
        break;
      }
    }
  }
  return StochasticModel(std::move(components));
}

namespace {

// Deterministic perturbations of the moment start used by the multi-start.
std::vector<Eigen::VectorXd> start_points(const FamilyTransform& transform,
                                          const StochasticModel& start,
                                          const GmwmOptions& options) {
  std::vector<Eigen::VectorXd> points;
  const Eigen::VectorXd u0 = transform.to_unconstrained(start);
  points.push_back(u0);
  static constexpr double kShifts[][2] = {
      {1.4, -1.0}, {-1.4, 1.0}, {0.8, 2.0}, {-0.8, -2.0},
      {2.2, 0.5},  {-2.2, -0.5}, {0.4, -2.5}, {-0.4, 2.5}};
  const int extra = std::max(0, options.starts - 1);
  for (int s = 0; s < extra && s < static_cast<int>(std::size(kShifts)); ++s) {
    Eigen::VectorXd u = u0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u[i] += kShifts[s][i % 2];
    }
    points.push_back(u);
  }
  for (const auto& model : options.extra_starts) {
    points.push_back(transform.to_unconstrained(model));
  }
  return points;
}

}  // namespace

GmwmFit gmwm_fit(const WvEstimate& wv, const ModelFamily& family,
                 const GmwmOptions& options) {
  const Eigen::Index levels = wv.nu_hat.size();
  const int q = parameter_count(family);
  if (q > levels) {
    throw Error(ErrorKind::under_identified,
                std::to_string(q) + " noise parameters cannot be identified "
                                    "from " +
                    std::to_string(levels) + " wavelet scales");
  }
  if (wv.omega.rows() != levels || wv.omega.cols() != levels) {
    throw Error(ErrorKind::invalid_argument, "gmwm_fit: bad weighting matrix");
  }

  const FamilyTransform transform(family);
  const long max_lag = (1L << levels) - 1;

  auto objective = [&](const Eigen::VectorXd& u) {
    const StochasticModel model = transform.to_model(u);
    const Eigen::VectorXd nu =
        theoretical_wv_closed_form(model.autocovariances(max_lag),
                                   static_cast<int>(levels));
    const Eigen::VectorXd diff = wv.nu_hat - nu;
    return diff.dot(wv.omega * diff);
  };

  GmwmFit best;
  best.objective = std::numeric_limits<double>::infinity();
  int total_evals = 0;
  for (const Eigen::VectorXd& u0 :
       start_points(transform, moment_start(wv, family), options)) {
    const SimplexResult run = minimize_simplex(objective, u0, options.simplex);
    total_evals += run.evaluations;
    if (run.value < best.objective) {
      best.objective = run.value;
      best.model = transform.to_model(run.x);
      best.converged = run.converged;
    }
  }
  best.evaluations = total_evals;
  return best;
}

GmwmFit gmwm_fit(std::span<const double> residuals, const ModelFamily& family,
                 const Eigen::MatrixXd& omega, int levels,
                 const GmwmOptions& options) {
  if (levels <= 0) levels = default_levels(residuals.size());
  WvEstimate wv = empirical_wv(modwt_haar(residuals, levels));
  wv.omega = omega.size() == 0 ? default_omega(wv) : omega;
  return gmwm_fit(wv, family, options);
}

// ---------------------------------------------------------------------------

namespace {

// OLS sandwich (A^T A)^-1 A^T Sigma A (A^T A)^-1 with the Sigma product done
// as gap-aware Toeplitz matvecs, keeping the one-iteration path O(n log n).
Eigen::MatrixXd sandwich_covariance(const DesignMatrix& design,
                                    const Eigen::MatrixXd& xtx_inverse,
                                    const StochasticModel& model,
                                    const std::vector<std::ptrdiff_t>& pos) {
  const Eigen::Index p = design.cols();
  const Eigen::MatrixXd b = design.entries * xtx_inverse;  // n x p
  const Eigen::VectorXd acov =
      model.autocovariances(static_cast<long>(pos.back()));
  Eigen::MatrixXd sigma_b(design.rows(), p);
  for (Eigen::Index k = 0; k < p; ++k) {
    sigma_b.col(k) = gapped_toeplitz_matvec(acov, pos, b.col(k));
  }
  Eigen::MatrixXd cov = b.transpose() * sigma_b;
  return 0.5 * (cov + cov.transpose());
}

// (A^T Sigma^-1 A)^-1 without a response vector; Levinson on a complete
// grid, dense Cholesky otherwise.
Eigen::MatrixXd information_inverse(const DesignMatrix& design,
                                    const StochasticModel& model,
                                    const std::vector<std::ptrdiff_t>& pos) {
  const Eigen::Index p = design.cols();
  Eigen::MatrixXd info(p, p);
  if (is_complete_grid(pos)) {
    const Eigen::VectorXd acov =
        model.autocovariances(static_cast<long>(pos.back()));
    info = design.entries.transpose() * toeplitz_solve(acov, design.entries);
  } else {
    const Eigen::MatrixXd sigma =
        model.covariance_matrix(std::span<const double>(
            design.epochs.data(),
            static_cast<std::size_t>(design.epochs.size())));
    const Eigen::MatrixXd l = cholesky_lower(sigma);
    const Eigen::MatrixXd a_white =
        l.triangularView<Eigen::Lower>().solve(design.entries);
    info = a_white.transpose() * a_white;
  }
  return spd_inverse(0.5 * (info + info.transpose()));
}

}  // namespace

EstimationResult gmwmx_estimate(const TimeSeries& series, const FunctionalSpec& spec,
                       const ModelFamily& family, const GmwmxOptions& options) {
  if (options.iterations != 1 && options.iterations != 2) {
    throw Error(ErrorKind::invalid_argument,
                "iterations must be 1 or 2, got " +
                    std::to_string(options.iterations));
  }
  series.validate();
  const auto t_total = Clock::now();

  EstimationResult result;
  result.alpha = options.alpha;
  result.iterations = options.iterations;

  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      series.values.data(), static_cast<Eigen::Index>(series.values.size()));
  const DesignMatrix design = build_design_matrix(series.epochs, spec);
  const auto pos = integer_grid_positions(series.epochs);
  const auto grid = static_cast<std::size_t>(pos.back()) + 1;

  int levels = options.levels > 0 ? options.levels
                                  : default_levels(grid);

  // Iteration 1: OLS, then moment-match the residual noise.
  auto t0 = Clock::now();
  const OlsFit ols_fit = ols(y, design);
  result.timing_seconds["regression"] = seconds_since(t0);

  auto run_wv = [&](const Eigen::VectorXd& residuals) {
    return wv_of_residuals(
        series.epochs,
        std::span<const double>(residuals.data(),
                                static_cast<std::size_t>(residuals.size())),
        levels, options.omega_kind);
  };

  t0 = Clock::now();
  WvEstimate wv = run_wv(ols_fit.residuals);
  result.timing_seconds["wavelet"] = seconds_since(t0);

  t0 = Clock::now();
  GmwmFit fit = gmwm_fit(wv, family, options.gmwm);
  result.timing_seconds["gmwm"] = seconds_since(t0);
  result.objective_trace.push_back(fit.objective);

  Eigen::VectorXd x_hat = ols_fit.x;

  if (options.iterations == 2) {
    t0 = Clock::now();
    const GlsFit gls_fit = gls_auto(y, design, fit.model);
    x_hat = gls_fit.x;
    result.timing_seconds["regression"] += seconds_since(t0);

    t0 = Clock::now();
    wv = run_wv(gls_fit.residuals);
    result.timing_seconds["wavelet"] += seconds_since(t0);

    t0 = Clock::now();
    GmwmOptions second = options.gmwm;
    second.extra_starts.push_back(fit.model);
    fit = gmwm_fit(wv, family, second);
    result.timing_seconds["gmwm"] += seconds_since(t0);
    result.objective_trace.push_back(fit.objective);
  }

  // Covariance of x_hat tied to the iteration count.
  t0 = Clock::now();
  result.x_cov = options.iterations == 1
                     ? sandwich_covariance(design, ols_fit.xtx_inverse,
                                           fit.model, pos)
                     : information_inverse(design, fit.model, pos);
  result.timing_seconds["covariance"] = seconds_since(t0);

  result.x_hat = x_hat;
  result.x_labels = design.column_labels;
  result.x_units = design.column_units;
  result.model_hat = fit.model;
  result.gamma_labels = fit.model.parameter_labels();
  result.optimizer_converged = fit.converged;
  result.optimizer_evaluations = fit.evaluations;
  result.wv = wv;
  result.wv_model = theoretical_wv_closed_form(fit.model, levels);
  result.gap_fraction = wv.gap_fraction;
  if (wv.high_gap_warning) {
    result.warnings.push_back(
        "more than 25% of the wavelet-variance grid was interpolated; "
        "moment estimates may be biased");
  }
  if (!fit.converged) {
    result.warnings.push_back(
        "moment optimizer stopped at the evaluation budget; best iterate kept");
  }

  result.x_sigma.resize(result.x_hat.size());
  result.ci.reserve(static_cast<std::size_t>(result.x_hat.size()));
  for (Eigen::Index i = 0; i < result.x_hat.size(); ++i) {
    result.x_sigma[i] = std::sqrt(std::max(result.x_cov(i, i), 0.0));
    result.ci.push_back(result.x_sigma[i] > 0.0
                            ? confidence_interval(result.x_hat[i],
                                                  result.x_sigma[i],
                                                  options.alpha)
                            : std::make_pair(result.x_hat[i], result.x_hat[i]));
  }
  result.timing_seconds["total"] = seconds_since(t_total);
  return result;
}

std::pair<double, double> confidence_interval(double estimate, double sigma,
                                              double alpha) {
  if (!(alpha > 0.0) || !(alpha < 0.5)) {
    throw Error(ErrorKind::invalid_argument,
                "alpha must lie in (0, 0.5), got " + std::to_string(alpha));
  }
  if (!(sigma > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "sigma must be positive");
  }
  const double z = normal_quantile(1.0 - alpha / 2.0);
  return {estimate - z * sigma, estimate + z * sigma};
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace gmwmx
