#ifndef GMWMX_STOCHASTIC_MODEL_HPP
#define GMWMX_STOCHASTIC_MODEL_HPP

#include <Eigen/Core>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gmwmx {

// Composite stationary noise models for daily position residuals. Lags are
// integer numbers of days, variances are mm^2.

struct WhiteNoise {
  double sigma2 = 1.0;  // process variance, mm^2
};

// Stationary fractionally differenced (power-law) noise with innovation
// variance sigma2 and memory parameter d in (0, 0.5):
//   gamma(0) = sigma2 * Gamma(1-2d) / Gamma(1-d)^2
//   gamma(k) = gamma(k-1) * (k-1+d) / (k-d)
struct PowerLaw {
  double sigma2 = 1.0;  // innovation variance, mm^2
  double d = 0.25;      // long-memory parameter, stationary for d < 0.5

  static constexpr double kMinD = 1e-4;
  static constexpr double kMaxD = 0.5 - 1e-4;
};

// Matern covariance gamma(tau) = sigma2 * 2^(1-nu)/Gamma(nu) (lambda tau)^nu
// K_nu(lambda tau), with gamma(0) = sigma2.
struct Matern {
  double sigma2 = 1.0;      // process variance, mm^2
  double lambda = 0.05;     // inverse range, 1/days
  double smoothness = 0.5;  // nu

  // Box used by the fitting transforms; keeps the Bessel evaluation away
  // from overflow corners.
  static constexpr double kMinLambda = 1e-5;
  static constexpr double kMaxLambda = 1e3;
  static constexpr double kMinSmoothness = 0.05;
  static constexpr double kMaxSmoothness = 5.0;
};

using NoiseComponent = std::variant<WhiteNoise, PowerLaw, Matern>;

enum class NoiseType { white, power_law, matern };

// A model family is the list of component types; parameter values are what
// estimation produces.
using ModelFamily = std::vector<NoiseType>;

NoiseType component_type(const NoiseComponent& component);
int parameter_count(NoiseType type);
int parameter_count(const ModelFamily& family);

class StochasticModel {
 public:
  StochasticModel() = default;
  explicit StochasticModel(std::vector<NoiseComponent> components);

  const std::vector<NoiseComponent>& components() const { return components_; }
  ModelFamily family() const;

  // Concatenated parameter vector gamma, in component order.
  Eigen::VectorXd parameters() const;
  std::vector<std::string> parameter_labels() const;
  static StochasticModel from_parameters(const ModelFamily& family,
                                         const Eigen::VectorXd& gamma);

  // Stationary autocovariance at an integer day lag.
  double autocovariance(long lag) const;

  // Table gamma(0..max_lag); O(max_lag) per power-law component.
  Eigen::VectorXd autocovariances(long max_lag) const;

  double variance() const { return autocovariance(0); }

  // Sigma(gamma) on the given epochs: the gap-subset of the full-grid
  // Toeplitz matrix. Epochs must be strictly increasing with integer day
  // spacing.
  Eigen::MatrixXd covariance_matrix(std::span<const double> epochs) const;

 private:
  std::vector<NoiseComponent> components_;
};

// Haar wavelet variance nu_j^2 implied by the model at scales tau_j = 2^j,
// j = 1..levels, evaluated by the definitional quadratic form over the
// explicit filter (O(4^j) per scale). This is the reference route.
Eigen::VectorXd theoretical_wv(const StochasticModel& model, int levels);

// Same quantity through the closed-form lag-weighted expression in the
// autocovariances; O(2^j) per scale. Production route for fitting.
Eigen::VectorXd theoretical_wv_closed_form(const StochasticModel& model,
                                           int levels);

// Closed form evaluated on a precomputed autocovariance table covering lags
// 0..2^levels - 1 (shared across scales and optimizer iterates).
Eigen::VectorXd theoretical_wv_closed_form(const Eigen::VectorXd& acov,
                                           int levels);

// Epochs helper: integer grid offsets relative to the first epoch.
std::vector<std::ptrdiff_t> integer_grid_positions(std::span<const double> epochs);

}  // namespace gmwmx

#endif
