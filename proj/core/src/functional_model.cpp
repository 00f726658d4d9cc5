#include "gmwmx/functional_model.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "gmwmx/errors.hpp"

namespace gmwmx {

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string harmonic_name(double freq_cpy) {
  if (freq_cpy == 1.0) return "annual";
  if (freq_cpy == 2.0) return "semiannual";
  return "f" + format_number(freq_cpy) + "cpy";
}

}  // namespace

void FunctionalSpec::validate() const {
  std::set<double> freqs;
  for (double f : harmonic_frequencies) {
    if (!(f > 0.0)) {
      throw Error(ErrorKind::domain, "harmonic frequency must be positive");
    }
    if (!freqs.insert(f).second) {
      throw Error(ErrorKind::domain,
                  "duplicate harmonic frequency " + format_number(f));
    }
  }
  std::set<double> offs(offset_epochs.begin(), offset_epochs.end());
  if (offs.size() != offset_epochs.size()) {
    throw Error(ErrorKind::rank_deficient,
                "duplicate offset epochs produce identical columns");
  }
  if (parameter_count() == 0) {
    throw Error(ErrorKind::invalid_argument, "empty functional model");
  }
}

DesignMatrix build_design_matrix(std::span<const double> epochs,
                                 const FunctionalSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(epochs.size());
  if (n == 0) {
    throw Error(ErrorKind::invalid_argument, "no epochs");
  }
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    if (!(epochs[i] > epochs[i - 1])) {
      throw Error(ErrorKind::invalid_argument,
                  "epochs must be strictly increasing");
    }
  }
  const double first = epochs.front();
  const double last = epochs.back();

  // Offsets at or before the first epoch give an all-ones column (H(0)=1),
  // after the last an all-zeros column; both are degenerate.
  std::vector<double> offsets = spec.offset_epochs;
  std::sort(offsets.begin(), offsets.end());
  for (double tk : offsets) {
    if (tk <= first || tk > last) {
      throw Error(ErrorKind::degenerate_column,
                  "offset epoch " + format_number(tk) +
                      " lies outside the open observation span (" +
                      format_number(first) + ", " + format_number(last) + "]");
    }
  }

  const Eigen::Index p = spec.parameter_count();
  if (n < p) {
    throw Error(ErrorKind::rank_deficient,
                "fewer epochs than parameters (" + std::to_string(n) + " < " +
                    std::to_string(p) + ")");
  }

  DesignMatrix design;
  design.entries.resize(n, p);
  design.epochs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design.epochs[i] = epochs[static_cast<std::size_t>(i)];
  }

  Eigen::Index col = 0;
  if (spec.include_intercept) {
    design.entries.col(col).setOnes();
    design.column_labels.emplace_back("intercept");
    design.column_units.emplace_back("mm");
    ++col;
  }
  if (spec.include_trend) {
    design.entries.col(col) =
        (design.epochs.array() - spec.reference_epoch) / kDaysPerYear;
    design.column_labels.emplace_back("trend");
    design.column_units.emplace_back("mm/yr");
    ++col;
  }
  for (double f : spec.harmonic_frequencies) {
    const Eigen::ArrayXd phase = 2.0 * std::numbers::pi * f *
                                 (design.epochs.array() - spec.reference_epoch) /
                                 kDaysPerYear;
    design.entries.col(col) = phase.sin();
    design.entries.col(col + 1) = phase.cos();
    design.column_labels.push_back(harmonic_name(f) + "_sin");
    design.column_labels.push_back(harmonic_name(f) + "_cos");
    design.column_units.emplace_back("mm");
    design.column_units.emplace_back("mm");
    col += 2;
  }
  for (double tk : offsets) {
    design.entries.col(col) =
        (design.epochs.array() >= tk).cast<double>();
    design.column_labels.push_back("offset_" + format_number(tk));
    design.column_units.emplace_back("mm");
    ++col;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.entries);
  if (qr.rank() < p) {
    throw Error(ErrorKind::rank_deficient,
                "design matrix is rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(p) +
                    " columns)");
  }
  return design;
}

Eigen::VectorXd evaluate_mean(const DesignMatrix& design,
                              const Eigen::VectorXd& x) {
  if (x.size() != design.cols()) {
    throw Error(ErrorKind::invalid_argument,
                "parameter vector length " + std::to_string(x.size()) +
                    " does not match " + std::to_string(design.cols()) +
                    " design columns");
  }
  return design.entries * x;
}

}  // namespace gmwmx
