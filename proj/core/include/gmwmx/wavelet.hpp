#ifndef GMWMX_WAVELET_HPP
#define GMWMX_WAVELET_HPP

#include <Eigen/Core>
#include <span>
#include <vector>

namespace gmwmx {

// Non-circular Haar MODWT coefficients. Level j uses the 2^j-tap filter, so
// scale j holds M_j = n - 2^j + 1 coefficients.
struct ModwtCoefficients {
  std::vector<Eigen::VectorXd> scales;
  int levels() const { return static_cast<int>(scales.size()); }
};

ModwtCoefficients modwt_haar(std::span<const double> series, int levels);

// Largest number of scales kept by default: floor(log2 n) - 2, at least 1.
int default_levels(std::size_t n);

enum class OmegaKind { plugin, identity };

struct WvEstimate {
  Eigen::VectorXd nu_hat;   // empirical wavelet variances, mm^2
  Eigen::VectorXd scales;   // tau_j = 2^j
  Eigen::VectorXi counts;   // M_j
  Eigen::MatrixXd omega;    // weighting matrix used by the moment fit
  double gap_fraction = 0.0;
  bool high_gap_warning = false;
};

// nu_hat_j = mean of squared coefficients at each scale (no mean removal).
WvEstimate empirical_wv(const ModwtCoefficients& coefficients);

// Diagonal plug-in weights Omega_jj = M_j / (2 nu_hat_j^4), the inverse of
// the large-sample Gaussian approximation var(nu_hat_j^2) ~ 2 nu_hat_j^4 / M_j.
// Throws on any zero empirical variance; callers may fall back to identity.
Eigen::MatrixXd default_omega(const WvEstimate& estimate);

struct FilledSeries {
  Eigen::VectorXd values;     // contiguous daily series over the span
  double gap_fraction = 0.0;  // fraction of interpolated samples
  bool high_gap_warning = false;
};

// Places gapped residuals on the full integer-day grid, filling missing days
// by linear interpolation between the nearest observed neighbours (nearest
// value at the boundaries, though the harness never removes endpoints).
FilledSeries fill_gaps_for_wv(std::span<const double> epochs,
                              std::span<const double> residuals);

// Convenience: residuals -> (fill) -> MODWT -> empirical WV with weights.
WvEstimate wv_of_residuals(std::span<const double> epochs,
                           std::span<const double> residuals, int levels,
                           OmegaKind omega_kind);

}  // namespace gmwmx

#endif
