#include "gmwmx/linalg.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <string>

#include "gmwmx/errors.hpp"

namespace gmwmx {

namespace {

// Slow scalar Cholesky, used only to locate the offending leading minor
// after the fast path has already failed.
int first_bad_minor(const Eigen::MatrixXd& s) {
  const Eigen::Index n = s.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = s(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0) || !std::isfinite(diag)) return static_cast<int>(j) + 1;
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (s(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return 0;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& spd) {
  if (spd.rows() != spd.cols()) {
    throw Error(ErrorKind::invalid_argument, "cholesky: matrix is not square");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success) {
    int minor = first_bad_minor(spd);
    throw Error(ErrorKind::not_positive_definite,
                "cholesky failed at leading minor " + std::to_string(minor) +
                    " of " + std::to_string(spd.rows()));
  }
  return llt.matrixL();
}

Eigen::MatrixXd toeplitz_solve(const Eigen::VectorXd& first_column,
                               const Eigen::MatrixXd& rhs) {
  const Eigen::Index n = first_column.size();
  if (rhs.rows() != n) {
    throw Error(ErrorKind::invalid_argument, "toeplitz_solve: size mismatch");
  }
  if (n == 0) return Eigen::MatrixXd(0, rhs.cols());
  if (!(first_column[0] > 0.0)) {
    throw Error(ErrorKind::not_positive_definite,
                "toeplitz_solve: non-positive diagonal");
  }

  // Levinson recursion on the normalized system (Golub & Van Loan, alg.
  // 4.7.3), with the reflection pass shared across right-hand sides.
  const Eigen::Index m = rhs.cols();
  Eigen::VectorXd t = first_column / first_column[0];
  Eigen::MatrixXd y = rhs / first_column[0];

  if (n == 1) return y;

  Eigen::MatrixXd x(n, m);
  x.row(0) = y.row(0);
  Eigen::VectorXd z(n);  // Durbin vector for the pure Toeplitz system
  z[0] = -t[1];
  double alpha = -t[1];
  double beta = 1.0;

  for (Eigen::Index k = 1; k < n; ++k) {
    beta *= (1.0 - alpha * alpha);
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw Error(ErrorKind::not_positive_definite,
                  "toeplitz_solve: recursion broke down at step " +
                      std::to_string(k) + " (matrix not positive definite)");
    }
    // mu_j = (b_k - sum_{i<k} t_{k-i} x_i) / beta, per column
    for (Eigen::Index c = 0; c < m; ++c) {
      double acc = y(k, c);
      for (Eigen::Index i = 0; i < k; ++i) acc -= t[k - i] * x(i, c);
      double mu = acc / beta;
      for (Eigen::Index i = 0; i < k; ++i) x(i, c) += mu * z[k - 1 - i];
      x(k, c) = mu;
    }
    if (k < n - 1) {
      double acc = t[k + 1];
      for (Eigen::Index i = 0; i < k; ++i) acc += t[k - i] * z[i];
      alpha = -acc / beta;
      for (Eigen::Index i = 0, j = k - 1; i < j; ++i, --j) {
        double zi = z[i], zj = z[j];
        z[i] = zi + alpha * zj;
        z[j] = zj + alpha * zi;
      }
      if ((k - 1) % 2 == 0) z[(k - 1) / 2] += alpha * z[(k - 1) / 2];
      z[k] = alpha;
    }
  }
  return x;
}

Eigen::VectorXd toeplitz_solve(const Eigen::VectorXd& first_column,
                               const Eigen::VectorXd& rhs) {
  return toeplitz_solve(first_column, Eigen::MatrixXd(rhs)).col(0);
}

Eigen::VectorXd toeplitz_matvec(const Eigen::VectorXd& first_column,
                                const Eigen::VectorXd& x) {
  const Eigen::Index n = first_column.size();
  if (x.size() != n) {
    throw Error(ErrorKind::invalid_argument, "toeplitz_matvec: size mismatch");
  }
  if (n == 0) return Eigen::VectorXd(0);
  std::vector<std::ptrdiff_t> pos(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = i;
  return gapped_toeplitz_matvec(first_column, pos, x);
}

Eigen::VectorXd gapped_toeplitz_matvec(const Eigen::VectorXd& first_column,
                                       const std::vector<std::ptrdiff_t>& pos,
                                       const Eigen::VectorXd& x) {
  const auto n_obs = static_cast<Eigen::Index>(pos.size());
  if (x.size() != n_obs) {
    throw Error(ErrorKind::invalid_argument,
                "gapped_toeplitz_matvec: size mismatch");
  }
  if (n_obs == 0) return Eigen::VectorXd(0);
  const std::ptrdiff_t span = pos.back();
  if (pos.front() != 0 || span < 0 || first_column.size() <= span) {
    throw Error(ErrorKind::invalid_argument,
                "gapped_toeplitz_matvec: positions must start at 0 and lie "
                "inside the autocovariance table");
  }
  const std::size_t g = static_cast<std::size_t>(span) + 1;

  // Embed the order-g symmetric Toeplitz matrix in a circulant of size
  // N >= 2g, then one forward/backward FFT pair does the product.
  const std::size_t nfft = next_pow2(2 * g);
  std::vector<double> circ(nfft, 0.0), vec(nfft, 0.0);
  for (std::size_t k = 0; k < g; ++k) circ[k] = first_column[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 1; k < g; ++k) circ[nfft - k] = circ[k];
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    vec[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])] += x[i];
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fc, fv;
  fft.fwd(fc, circ);
  fft.fwd(fv, vec);
  for (std::size_t i = 0; i < fc.size(); ++i) fc[i] *= fv[i];
  std::vector<double> full;
  fft.inv(full, fc);

  Eigen::VectorXd out(n_obs);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    out[i] = full[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])];
  }
  return out;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& spd) {
  Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::not_positive_definite, "spd_inverse: not SPD");
  }
  return llt.solve(Eigen::MatrixXd::Identity(spd.rows(), spd.cols()));
}

namespace {
Eigen::MatrixXd spd_power(const Eigen::MatrixXd& spd, double exponent) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spd);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::not_positive_definite, "spd_power: eig failed");
  }
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorKind::not_positive_definite,
                "spd_power: non-positive eigenvalue");
  }
  return es.eigenvectors() *
         es.eigenvalues().array().pow(exponent).matrix().asDiagonal() *
         es.eigenvectors().transpose();
}
}  // namespace

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& spd) { return spd_power(spd, 0.5); }
Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& spd) { return spd_power(spd, -0.5); }

}  // namespace gmwmx
