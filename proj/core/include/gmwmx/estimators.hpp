#ifndef GMWMX_ESTIMATORS_HPP
#define GMWMX_ESTIMATORS_HPP

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmwmx/functional_model.hpp"
#include "gmwmx/optimize.hpp"
#include "gmwmx/stochastic_model.hpp"
#include "gmwmx/time_series.hpp"
#include "gmwmx/wavelet.hpp"

namespace gmwmx {

// ---------------------------------------------------------------------------
// Least squares

struct OlsFit {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inverse;  // (A^T A)^-1, for the sandwich covariance
};

// Householder QR, never the normal equations. Throws on rank deficiency.
OlsFit ols(const Eigen::VectorXd& y, const DesignMatrix& design);

struct GlsFit {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd x_cov;  // (A^T Sigma^-1 A)^-1
};

// Cholesky whitening followed by OLS on the whitened system.
GlsFit gls(const Eigen::VectorXd& y, const DesignMatrix& design,
           const Eigen::MatrixXd& sigma);

// Same estimator through the Levinson recursion when the epochs form a
// complete grid so Sigma is Toeplitz; O(p n^2) without forming Sigma.
GlsFit gls_toeplitz(const Eigen::VectorXd& y, const DesignMatrix& design,
                    const Eigen::VectorXd& acov_first_column);

// Dispatches to the Toeplitz path on a complete grid, dense otherwise.
GlsFit gls_auto(const Eigen::VectorXd& y, const DesignMatrix& design,
                const StochasticModel& model);

// ---------------------------------------------------------------------------
// Moment matching of the stochastic parameters

// Bijection between the admissible parameter region and R^q used by the
// derivative-free search: log for variances, scaled logit for the power-law
// memory parameter and the Matern box.
class FamilyTransform {
 public:
  explicit FamilyTransform(ModelFamily family);

  int dimension() const { return dimension_; }
  const ModelFamily& family() const { return family_; }

  Eigen::VectorXd to_unconstrained(const StochasticModel& model) const;
  StochasticModel to_model(const Eigen::VectorXd& u) const;

 private:
  ModelFamily family_;
  int dimension_ = 0;
};

// Cheap moment-based starting point: the white variance from the smallest
// scale, long-memory variance from the excess at larger scales, d from the
// log-log slope of nu_hat over the largest scales.
StochasticModel moment_start(const WvEstimate& wv, const ModelFamily& family);

struct GmwmOptions {
  int starts = 5;  // multi-start count around the moment start
  SimplexOptions simplex{1e-9, 2000, 0.4};
  std::vector<StochasticModel> extra_starts;
};

struct GmwmFit {
  StochasticModel model;
  double objective = 0.0;
  bool converged = false;
  int evaluations = 0;
};

// gamma = argmin {nu_hat - nu(gamma)}^T Omega {nu_hat - nu(gamma)} over the
// feasible box, via multi-start Nelder-Mead in transformed coordinates.
GmwmFit gmwm_fit(const WvEstimate& wv, const ModelFamily& family,
                 const GmwmOptions& options = {});

// Residual-series entry point: computes the WV, then fits. An empty omega
// selects the diagonal plug-in weights.
GmwmFit gmwm_fit(std::span<const double> residuals, const ModelFamily& family,
                 const Eigen::MatrixXd& omega = {}, int levels = 0,
                 const GmwmOptions& options = {});

// ---------------------------------------------------------------------------
// The iterated estimator

struct GmwmxOptions {
  int iterations = 1;  // 1 or 2
  double alpha = 0.05;
  OmegaKind omega_kind = OmegaKind::plugin;
  int levels = 0;  // 0 -> floor(log2 n) - 2
  GmwmOptions gmwm;
};

struct EstimationResult {
  Eigen::VectorXd x_hat;
  std::vector<std::string> x_labels;
  std::vector<std::string> x_units;
  Eigen::MatrixXd x_cov;
  Eigen::VectorXd x_sigma;
  std::vector<std::pair<double, double>> ci;
  double alpha = 0.05;

  StochasticModel model_hat;
  std::vector<std::string> gamma_labels;

  int iterations = 1;
  std::vector<double> objective_trace;  // best GMWM objective per iteration
  bool optimizer_converged = true;
  int optimizer_evaluations = 0;
  std::optional<double> loglik;  // set by the likelihood oracle only

  WvEstimate wv;            // empirical WV of the final residuals
  Eigen::VectorXd wv_model; // nu(gamma_hat) at the same scales

  double gap_fraction = 0.0;
  std::vector<std::string> warnings;
  std::map<std::string, double> timing_seconds;
};

// The iterated procedure: OLS residuals -> GMWM, and for two iterations a
// GLS pass with Sigma(gamma^(1)) before refitting. Rows with missing
// observations are absent from the series; residuals are gap-filled for the
// wavelet variance only. Confidence intervals are x_i +/- z_{1-alpha/2} s_i
// with the covariance tied to the iteration count: the OLS sandwich for one
// iteration, (A^T Sigma^-1 A)^-1 for two.
EstimationResult gmwmx_estimate(const TimeSeries& series, const FunctionalSpec& spec,
                       const ModelFamily& family,
                       const GmwmxOptions& options = {});

// z_{1-alpha/2} interval; alpha must lie in (0, 0.5), sigma must be positive.
std::pair<double, double> confidence_interval(double estimate, double sigma,
                                              double alpha);

double normal_quantile(double p);

}  // namespace gmwmx

#endif
