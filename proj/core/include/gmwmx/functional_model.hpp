#ifndef GMWMX_FUNCTIONAL_MODEL_HPP
#define GMWMX_FUNCTIONAL_MODEL_HPP

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

namespace gmwmx {

// Deterministic trajectory model: intercept, velocity, seasonal harmonics
// and Heaviside offsets. Epochs are days (MJD-like); the trend column is
// (t - t0)/365.25 so the velocity is reported in mm/year.
struct FunctionalSpec {
  double reference_epoch = 0.0;  // t0, days
  bool include_intercept = true;
  bool include_trend = true;
  std::vector<double> harmonic_frequencies = {1.0, 2.0};  // cycles/year
  std::vector<double> offset_epochs;                      // days

  int parameter_count() const {
    return (include_intercept ? 1 : 0) + (include_trend ? 1 : 0) +
           2 * static_cast<int>(harmonic_frequencies.size()) +
           static_cast<int>(offset_epochs.size());
  }

  // Frequencies strictly positive and distinct; offsets distinct.
  void validate() const;
};

struct DesignMatrix {
  Eigen::MatrixXd entries;
  std::vector<std::string> column_labels;
  std::vector<std::string> column_units;
  Eigen::VectorXd epochs;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

// Column order: [intercept, trend, (sin f1, cos f1), (sin f2, cos f2), ...,
// offsets in epoch order]. Offsets use H(0) = 1, i.e. the step applies at
// its own epoch. Throws on rank deficiency and on offsets outside the open
// span (those yield constant columns).
DesignMatrix build_design_matrix(std::span<const double> epochs,
                                 const FunctionalSpec& spec);

// A * x, with a dimension check.
Eigen::VectorXd evaluate_mean(const DesignMatrix& design,
                              const Eigen::VectorXd& x);

constexpr double kDaysPerYear = 365.25;

}  // namespace gmwmx

#endif
