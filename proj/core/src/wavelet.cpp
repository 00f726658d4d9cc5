#include "gmwmx/wavelet.hpp"

#include <cmath>
#include <string>

#include "gmwmx/errors.hpp"
#include "gmwmx/stochastic_model.hpp"

namespace gmwmx {

int default_levels(std::size_t n) {
  int levels = 0;
  while ((std::size_t{2} << levels) <= n) ++levels;  // floor(log2 n)
  return levels > 3 ? levels - 2 : 1;
}

ModwtCoefficients modwt_haar(std::span<const double> series, int levels) {
  const auto n = static_cast<Eigen::Index>(series.size());
  if (levels < 1) {
    throw Error(ErrorKind::invalid_argument, "modwt_haar: levels must be >= 1");
  }
  if (n < (Eigen::Index{1} << levels)) {
    int feasible = 0;
    while ((Eigen::Index{2} << feasible) <= n) ++feasible;
    throw Error(ErrorKind::insufficient_length,
                "series of length " + std::to_string(n) + " supports at most " +
                    std::to_string(feasible) + " scales, requested " +
                    std::to_string(levels));
  }

  // Prefix sums give every scale in O(n): the coefficient ending at sample t
  // is the difference of two adjacent half-window sums divided by tau_j.
  Eigen::VectorXd prefix(n + 1);
  prefix[0] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series[i];

  ModwtCoefficients out;
  out.scales.reserve(static_cast<std::size_t>(levels));
  for (int j = 1; j <= levels; ++j) {
    const Eigen::Index tau = Eigen::Index{1} << j;
    const Eigen::Index half = tau / 2;
    const Eigen::Index count = n - tau + 1;
    Eigen::VectorXd w(count);
    for (Eigen::Index t = tau; t <= n; ++t) {
      const double recent = prefix[t] - prefix[t - half];
      const double older = prefix[t - half] - prefix[t - tau];
      w[t - tau] = (recent - older) / static_cast<double>(tau);
    }
    out.scales.push_back(std::move(w));
  }
  return out;
}

WvEstimate empirical_wv(const ModwtCoefficients& coefficients) {
  const int levels = coefficients.levels();
  if (levels == 0) {
    throw Error(ErrorKind::invalid_argument, "empirical_wv: no scales");
  }
  WvEstimate est;
  est.nu_hat.resize(levels);
  est.scales.resize(levels);
  est.counts.resize(levels);
  for (int j = 0; j < levels; ++j) {
    const Eigen::VectorXd& w = coefficients.scales[static_cast<std::size_t>(j)];
    if (w.size() == 0) {
      throw Error(ErrorKind::invalid_argument,
                  "empirical_wv: empty scale " + std::to_string(j + 1));
    }
    est.nu_hat[j] = w.squaredNorm() / static_cast<double>(w.size());
    est.scales[j] = static_cast<double>(Eigen::Index{1} << (j + 1));
    est.counts[j] = static_cast<int>(w.size());
  }
  return est;
}

Eigen::MatrixXd default_omega(const WvEstimate& estimate) {
  const Eigen::Index levels = estimate.nu_hat.size();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(levels, levels);
  for (Eigen::Index j = 0; j < levels; ++j) {
    const double nu = estimate.nu_hat[j];
    if (!(nu > 0.0)) {
      throw Error(ErrorKind::degenerate_weight,
                  "zero empirical wavelet variance at scale " +
                      std::to_string(j + 1) +
                      "; pass identity weights instead");
    }
    // nu_hat holds the variance nu_j^2, so this is M_j / (2 nu_j^4).
    omega(j, j) = static_cast<double>(estimate.counts[j]) / (2.0 * nu * nu);
  }
  return omega;
}

FilledSeries fill_gaps_for_wv(std::span<const double> epochs,
                              std::span<const double> residuals) {
  if (epochs.size() != residuals.size() || epochs.empty()) {
    throw Error(ErrorKind::invalid_argument, "fill_gaps_for_wv: bad input sizes");
  }
  const auto pos = integer_grid_positions(epochs);
  const auto grid = static_cast<Eigen::Index>(pos.back()) + 1;

  FilledSeries out;
  out.values.resize(grid);
  Eigen::Index prev_pos = 0;
  out.values[0] = residuals[0];
  for (std::size_t i = 1; i < pos.size(); ++i) {
    const auto cur = static_cast<Eigen::Index>(pos[i]);
    const double left = residuals[i - 1];
    const double right = residuals[i];
    const double run = static_cast<double>(cur - prev_pos);
    for (Eigen::Index t = prev_pos + 1; t < cur; ++t) {
      const double w = static_cast<double>(t - prev_pos) / run;
      out.values[t] = (1.0 - w) * left + w * right;
    }
    out.values[cur] = right;
    prev_pos = cur;
  }

  const auto observed = static_cast<Eigen::Index>(pos.size());
  out.gap_fraction =
      static_cast<double>(grid - observed) / static_cast<double>(grid);
  out.high_gap_warning = out.gap_fraction > 0.25;
  return out;
}

WvEstimate wv_of_residuals(std::span<const double> epochs,
                           std::span<const double> residuals, int levels,
                           OmegaKind omega_kind) {
  FilledSeries filled = fill_gaps_for_wv(epochs, residuals);
  if (levels <= 0) {
    levels = default_levels(static_cast<std::size_t>(filled.values.size()));
  }
  WvEstimate est = empirical_wv(modwt_haar(
      std::span<const double>(filled.values.data(),
                              static_cast<std::size_t>(filled.values.size())),
      levels));
  est.gap_fraction = filled.gap_fraction;
  est.high_gap_warning = filled.high_gap_warning;
  est.omega = omega_kind == OmegaKind::identity
                  ? Eigen::MatrixXd::Identity(levels, levels)
                  : default_omega(est);
  return est;
}

}  // namespace gmwmx
