#ifndef GMWMX_LINALG_HPP
#define GMWMX_LINALG_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace gmwmx {

// Dense Cholesky with a diagnostic failure path: on success returns the lower
// factor, on failure reports the first non-positive leading minor.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& spd);

// Solve T x = b for a symmetric positive-definite Toeplitz matrix given by
// its first column, via the Levinson recursion. O(n^2) time, O(n) workspace.
Eigen::VectorXd toeplitz_solve(const Eigen::VectorXd& first_column,
                               const Eigen::VectorXd& rhs);

// Same factor pass shared across all right-hand-side columns.
Eigen::MatrixXd toeplitz_solve(const Eigen::VectorXd& first_column,
                               const Eigen::MatrixXd& rhs);

// y = T x for the symmetric Toeplitz matrix with the given first column,
// computed with a circulant FFT embedding in O(n log n).
Eigen::VectorXd toeplitz_matvec(const Eigen::VectorXd& first_column,
                                const Eigen::VectorXd& x);

// Gap-subset Toeplitz matvec: rows/columns restricted to integer grid
// positions `pos` (strictly increasing, pos.front() == 0). `first_column`
// must cover lags up to pos.back(). Cost is O(G log G) in the grid span G.
Eigen::VectorXd gapped_toeplitz_matvec(const Eigen::VectorXd& first_column,
                                       const std::vector<std::ptrdiff_t>& pos,
                                       const Eigen::VectorXd& x);

// Inverse of a small SPD matrix through its Cholesky factorization.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& spd);

// Symmetric square root and inverse square root via eigendecomposition.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& spd);
Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& spd);

}  // namespace gmwmx

#endif
