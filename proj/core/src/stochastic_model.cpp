#include "gmwmx/stochastic_model.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

#include "gmwmx/errors.hpp"

namespace gmwmx {

namespace {

void validate(const WhiteNoise& c) {
  if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2)) {
    throw Error(ErrorKind::domain, "white noise variance must be positive");
  }
}

void validate(const PowerLaw& c) {
  if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2)) {
    throw Error(ErrorKind::domain, "power-law variance must be positive");
  }
  if (!(c.d > 0.0) || !(c.d < 0.5)) {
    throw Error(ErrorKind::domain,
                "power-law memory parameter d must lie in (0, 0.5), got " +
                    std::to_string(c.d));
  }
}

void validate(const Matern& c) {
  if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2)) {
    throw Error(ErrorKind::domain, "Matern variance must be positive");
  }
  if (!(c.lambda > 0.0) || !(c.smoothness > 0.0)) {
    throw Error(ErrorKind::domain, "Matern lambda and smoothness must be positive");
  }
}

double power_law_variance(const PowerLaw& c) {
  // Gamma(1-2d) / Gamma(1-d)^2 in the log domain
  return c.sigma2 * std::exp(std::lgamma(1.0 - 2.0 * c.d) -
                             2.0 * std::lgamma(1.0 - c.d));
}

double matern_autocov(const Matern& c, double tau) {
  if (tau == 0.0) return c.sigma2;
  const double x = c.lambda * tau;
  if (x > 705.0) return 0.0;  // K_nu underflows, covariance is numerically zero
  double bessel;
  try {
    bessel = boost::math::cyl_bessel_k(c.smoothness, x);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::domain,
                std::string("Matern covariance evaluation failed: ") + e.what());
  }
  const double log_front = (1.0 - c.smoothness) * std::log(2.0) -
                           std::lgamma(c.smoothness) +
                           c.smoothness * std::log(x);
  return c.sigma2 * std::exp(log_front) * bessel;
}

struct AutocovAt {
  long lag;
  double operator()(const WhiteNoise& c) const { return lag == 0 ? c.sigma2 : 0.0; }
  double operator()(const PowerLaw& c) const {
    double g = power_law_variance(c);
    for (long k = 1; k <= lag; ++k) {
      g *= (static_cast<double>(k) - 1.0 + c.d) / (static_cast<double>(k) - c.d);
    }
    return g;
  }
  double operator()(const Matern& c) const {
    return matern_autocov(c, static_cast<double>(lag));
  }
};

struct FillTable {
  Eigen::VectorXd& table;
  void operator()(const WhiteNoise& c) const { table[0] += c.sigma2; }
  void operator()(const PowerLaw& c) const {
    double g = power_law_variance(c);
    table[0] += g;
    for (Eigen::Index k = 1; k < table.size(); ++k) {
      g *= (static_cast<double>(k) - 1.0 + c.d) / (static_cast<double>(k) - c.d);
      table[k] += g;
    }
  }
  void operator()(const Matern& c) const {
    for (Eigen::Index k = 0; k < table.size(); ++k) {
      table[k] += matern_autocov(c, static_cast<double>(k));
    }
  }
};

}  // namespace

NoiseType component_type(const NoiseComponent& component) {
  if (std::holds_alternative<WhiteNoise>(component)) return NoiseType::white;
  if (std::holds_alternative<PowerLaw>(component)) return NoiseType::power_law;
  return NoiseType::matern;
}

int parameter_count(NoiseType type) {
  switch (type) {
    case NoiseType::white: return 1;
    case NoiseType::power_law: return 2;
    case NoiseType::matern: return 3;
  }
  return 0;
}

int parameter_count(const ModelFamily& family) {
  int q = 0;
  for (NoiseType t : family) q += parameter_count(t);
  return q;
}

StochasticModel::StochasticModel(std::vector<NoiseComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw Error(ErrorKind::invalid_argument,
                "stochastic model needs at least one component");
  }
  for (const auto& c : components_) {
    std::visit([](const auto& v) { validate(v); }, c);
  }
}

ModelFamily StochasticModel::family() const {
  ModelFamily f;
  f.reserve(components_.size());
  for (const auto& c : components_) f.push_back(component_type(c));
  return f;
}

Eigen::VectorXd StochasticModel::parameters() const {
  Eigen::VectorXd gamma(parameter_count(family()));
  Eigen::Index i = 0;
  for (const auto& c : components_) {
    if (const auto* w = std::get_if<WhiteNoise>(&c)) {
      gamma[i++] = w->sigma2;
    } else if (const auto* p = std::get_if<PowerLaw>(&c)) {
      gamma[i++] = p->sigma2;
      gamma[i++] = p->d;
    } else if (const auto* m = std::get_if<Matern>(&c)) {
      gamma[i++] = m->sigma2;
      gamma[i++] = m->lambda;
      gamma[i++] = m->smoothness;
    }
  }
  return gamma;
}

std::vector<std::string> StochasticModel::parameter_labels() const {
  std::vector<std::string> labels;
  int white = 0, pl = 0, mat = 0;
  auto suffix = [](int count) {
    return count > 1 ? "_" + std::to_string(count) : std::string();
  };
  for (const auto& c : components_) {
    switch (component_type(c)) {
      case NoiseType::white:
        labels.push_back("white" + suffix(++white) + ".sigma2");
        break;
      case NoiseType::power_law: {
        std::string base = "powerlaw" + suffix(++pl);
        labels.push_back(base + ".sigma2");
        labels.push_back(base + ".d");
        break;
      }
      case NoiseType::matern: {
        std::string base = "matern" + suffix(++mat);
        labels.push_back(base + ".sigma2");
        labels.push_back(base + ".lambda");
        labels.push_back(base + ".smoothness");
        break;
      }
    }
  }
  return labels;
}

StochasticModel StochasticModel::from_parameters(const ModelFamily& family,
                                                 const Eigen::VectorXd& gamma) {
  if (gamma.size() != parameter_count(family)) {
    throw Error(ErrorKind::invalid_argument,
                "gamma length does not match the model family");
  }
  std::vector<NoiseComponent> components;
  Eigen::Index i = 0;
  for (NoiseType t : family) {
    switch (t) {
      case NoiseType::white:
        components.push_back(WhiteNoise{gamma[i]});
        i += 1;
        break;
      case NoiseType::power_law:
        components.push_back(PowerLaw{gamma[i], gamma[i + 1]});
        i += 2;
        break;
      case NoiseType::matern:
        components.push_back(Matern{gamma[i], gamma[i + 1], gamma[i + 2]});
        i += 3;
        break;
    }
  }
  return StochasticModel(std::move(components));
}

double StochasticModel::autocovariance(long lag) const {
  if (lag < 0) {
    throw Error(ErrorKind::invalid_argument, "autocovariance: negative lag");
  }
  double total = 0.0;
  for (const auto& c : components_) total += std::visit(AutocovAt{lag}, c);
  return total;
}

Eigen::VectorXd StochasticModel::autocovariances(long max_lag) const {
  if (max_lag < 0) {
    throw Error(ErrorKind::invalid_argument, "autocovariances: negative lag");
  }
  Eigen::VectorXd table = Eigen::VectorXd::Zero(max_lag + 1);
  for (const auto& c : components_) std::visit(FillTable{table}, c);
  return table;
}

std::vector<std::ptrdiff_t> integer_grid_positions(std::span<const double> epochs) {
  std::vector<std::ptrdiff_t> pos(epochs.size());
  if (epochs.empty()) return pos;
  const double t0 = epochs[0];
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const double offset = epochs[i] - t0;
    const double rounded = std::round(offset);
    if (std::abs(offset - rounded) > 1e-6) {
      throw Error(ErrorKind::invalid_argument,
                  "epochs are not on an integer day grid (epoch index " +
                      std::to_string(i) + ")");
    }
    pos[i] = static_cast<std::ptrdiff_t>(rounded);
    if (i > 0 && pos[i] <= pos[i - 1]) {
      throw Error(ErrorKind::invalid_argument,
                  "epochs must be strictly increasing");
    }
  }
  return pos;
}

Eigen::MatrixXd StochasticModel::covariance_matrix(
    std::span<const double> epochs) const {
  const auto pos = integer_grid_positions(epochs);
  const auto n = static_cast<Eigen::Index>(pos.size());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::VectorXd table = autocovariances(pos.back());
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = table[pos[static_cast<std::size_t>(i)] -
                             pos[static_cast<std::size_t>(j)]];
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  return sigma;
}

namespace {

// Haar filter at scale tau = 2^j: +1/tau for the first half of the taps,
// -1/tau for the second half. White noise then maps to nu_j^2 = sigma2/tau.
Eigen::VectorXd haar_filter(int level) {
  const Eigen::Index taps = Eigen::Index{1} << level;
  const double amp = 1.0 / static_cast<double>(taps);
  Eigen::VectorXd h(taps);
  h.head(taps / 2).setConstant(amp);
  h.tail(taps / 2).setConstant(-amp);
  return h;
}

void check_levels(int levels) {
  if (levels < 1) {
    throw Error(ErrorKind::invalid_argument, "levels must be >= 1");
  }
  if (levels > 25) {
    throw Error(ErrorKind::invalid_argument, "levels > 25 is not supported");
  }
}

}  // namespace

Eigen::VectorXd theoretical_wv(const StochasticModel& model, int levels) {
  check_levels(levels);
  const long max_lag = (1L << levels) - 1;
  const Eigen::VectorXd acov = model.autocovariances(max_lag);
  Eigen::VectorXd nu(levels);
  for (int j = 1; j <= levels; ++j) {
    const Eigen::VectorXd h = haar_filter(j);
    const Eigen::Index taps = h.size();
    double total = 0.0;
    for (Eigen::Index l = 0; l < taps; ++l) {
      for (Eigen::Index m = 0; m < taps; ++m) {
        total += h[l] * h[m] * acov[std::abs(l - m)];
      }
    }
    nu[j - 1] = total;
  }
  return nu;
}

Eigen::VectorXd theoretical_wv_closed_form(const Eigen::VectorXd& acov,
                                           int levels) {
  check_levels(levels);
  if (acov.size() < (Eigen::Index{1} << levels)) {
    throw Error(ErrorKind::invalid_argument,
                "autocovariance table too short for the requested levels");
  }
  Eigen::VectorXd nu(levels);
  for (int j = 1; j <= levels; ++j) {
    const long m = 1L << (j - 1);  // half filter length
    // nu_j^2 = [ m g0 + sum_{k<m} (2m-3k) g_k - m g_m
    //            + sum_{m<k<2m} (k-2m) g_k ] / (2 m^2)
    double acc = static_cast<double>(m) * acov[0];
    for (long k = 1; k < m; ++k) {
      acc += static_cast<double>(2 * m - 3 * k) * acov[k];
    }
    acc -= static_cast<double>(m) * acov[m];
    for (long k = m + 1; k < 2 * m; ++k) {
      acc += static_cast<double>(k - 2 * m) * acov[k];
    }
    nu[j - 1] = acc / (2.0 * static_cast<double>(m) * static_cast<double>(m));
  }
  return nu;
}

Eigen::VectorXd theoretical_wv_closed_form(const StochasticModel& model,
                                           int levels) {
  check_levels(levels);
  return theoretical_wv_closed_form(
      model.autocovariances((1L << levels) - 1), levels);
}

}  // namespace gmwmx
