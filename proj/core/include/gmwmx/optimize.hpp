#ifndef GMWMX_OPTIMIZE_HPP
#define GMWMX_OPTIMIZE_HPP

#include <Eigen/Core>
#include <functional>

namespace gmwmx {

struct SimplexOptions {
  double relative_tolerance = 1e-9;  // on the spread of simplex values
  int max_evaluations = 2000;
  double initial_step = 0.4;  // edge length of the starting simplex
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free Nelder-Mead simplex minimization of an unconstrained
// objective. Deterministic: same start, same path.
SimplexResult minimize_simplex(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, const SimplexOptions& options = {});

}  // namespace gmwmx

#endif
