#ifndef GMWMX_LIKELIHOOD_HPP
#define GMWMX_LIKELIHOOD_HPP

#include <Eigen/Core>
#include <span>

#include "gmwmx/estimators.hpp"
#include "gmwmx/functional_model.hpp"
#include "gmwmx/stochastic_model.hpp"
#include "gmwmx/time_series.hpp"

namespace gmwmx {

// Desk-scale Gaussian reference estimator. Deliberately dense O(n^3) per
// likelihood evaluation so its wall-clock is the baseline the fast paths are
// measured against. A size cap refuses production-sized inputs.

inline constexpr int kDefaultLikelihoodCap = 8192;

// log of the Gaussian density: -1/2 (y-Ax)^T Sigma^-1 (y-Ax)
// - 1/2 log det(2 pi Sigma), with the determinant from the Cholesky factor.
double gaussian_loglik(const Eigen::VectorXd& y, const DesignMatrix& design,
                       const Eigen::VectorXd& x, const StochasticModel& model,
                       int max_n = kDefaultLikelihoodCap);

struct MleOptions {
  int max_n = kDefaultLikelihoodCap;
  SimplexOptions simplex{1e-7, 400, 0.25};
  // Refine the start with a moment fit of the OLS residuals before the
  // likelihood search; cheap and reliably inside the basin.
  bool init_from_gmwm = true;
  double alpha = 0.05;
};

// Profile MLE: for each candidate shape of the noise model, x is
// concentrated out by GLS and the overall noise scale in closed form, so
// the simplex only searches the remaining shape/ratio parameters.
EstimationResult mle_fit(const TimeSeries& series, const FunctionalSpec& spec,
                         const ModelFamily& family,
                         const MleOptions& options = {});

struct EfficiencyGap {
  Eigen::MatrixXd difference;  // V* - V
  double min_eigenvalue = 0.0;
  double idempotency_gap = 0.0;  // ||B^2 - B||_F
};

// V* = n (A^T A)^-1 A^T Sigma A (A^T A)^-1 against V = n (A^T Sigma^-1 A)^-1,
// and the idempotency of B = Sigma^-1/2 A (A^T Sigma^-1 A)^-1 A^T Sigma^-1/2.
EfficiencyGap efficiency_gap(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& sigma);

}  // namespace gmwmx

#endif
