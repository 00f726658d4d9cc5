#include "gmwmx/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "gmwmx/errors.hpp"

namespace gmwmx {

SimplexResult minimize_simplex(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, const SimplexOptions& options) {
  const int n = static_cast<int>(start.size());
  if (n == 0) {
    throw Error(ErrorKind::invalid_argument, "minimize_simplex: empty start");
  }

  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    double f = objective(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::max();
  };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n) + 1, start);
  std::vector<double> vals(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) {
    double step = options.initial_step;
    if (start[i] != 0.0) step = std::max(step, 0.1 * std::abs(start[i]));
    pts[static_cast<std::size_t>(i) + 1][i] += step;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  SimplexResult result;
  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t lo = order.front(), hi = order.back();
    const std::size_t second_hi = order[order.size() - 2];

    const double spread = std::abs(vals[hi] - vals[lo]);
    const double scale = std::abs(vals[lo]) + std::abs(vals[hi]) + 1e-300;
    if (2.0 * spread <= options.relative_tolerance * scale) {
      result.converged = true;
      break;
    }
    if (evals >= options.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i : order) {
      if (i != hi) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    Eigen::VectorXd reflected = centroid + kReflect * (centroid - pts[hi]);
    double f_reflected = eval(reflected);
    if (f_reflected < vals[lo]) {
      Eigen::VectorXd expanded = centroid + kExpand * (reflected - centroid);
      double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        pts[hi] = expanded;
        vals[hi] = f_expanded;
      } else {
        pts[hi] = reflected;
        vals[hi] = f_reflected;
      }
    } else if (f_reflected < vals[second_hi]) {
      pts[hi] = reflected;
      vals[hi] = f_reflected;
    } else {
      const bool outside = f_reflected < vals[hi];
      Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + kContract * (reflected - centroid))
                  : Eigen::VectorXd(centroid - kContract * (centroid - pts[hi]));
      double f_contracted = eval(contracted);
      if (f_contracted < std::min(f_reflected, vals[hi])) {
        pts[hi] = contracted;
        vals[hi] = f_contracted;
      } else {
        for (std::size_t i : order) {
          if (i == lo) continue;
          pts[i] = pts[lo] + kShrink * (pts[i] - pts[lo]);
          vals[i] = eval(pts[i]);
        }
      }
    }
  }

  std::size_t best = static_cast<std::size_t>(
      std::min_element(vals.begin(), vals.end()) - vals.begin());
  result.x = pts[best];
  result.value = vals[best];
  result.evaluations = evals;
  return result;
}

}  // namespace gmwmx
