#include <doctest.h>

#include <Eigen/Dense>

#include "gmwmx/errors.hpp"
#include "gmwmx/linalg.hpp"
#include "gmwmx/stochastic_model.hpp"

using namespace gmwmx;

namespace {

Eigen::VectorXd plwn_acov(int n) {
  StochasticModel model({PowerLaw{10.0, 0.4}, WhiteNoise{15.0}});
  return model.autocovariances(n - 1);
}

Eigen::MatrixXd toeplitz_from(const Eigen::VectorXd& c) {
  const Eigen::Index n = c.size();
  Eigen::MatrixXd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) t(i, j) = c[std::abs(i - j)];
  }
  return t;
}

}  // namespace

TEST_CASE("levinson solve matches dense solve") {
  for (int n : {1, 2, 3, 64, 257}) {
    const Eigen::VectorXd c = plwn_acov(n);
    const Eigen::MatrixXd t = toeplitz_from(c);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = std::sin(0.7 * i) + 0.1 * i;

    const Eigen::VectorXd x = toeplitz_solve(c, b);
    const Eigen::VectorXd x_dense = t.llt().solve(b);
    CHECK((x - x_dense).norm() <= 1e-9 * (1.0 + x_dense.norm()));
  }
}

TEST_CASE("levinson multi-rhs equals column-by-column") {
  const int n = 96;
  const Eigen::VectorXd c = plwn_acov(n);
  Eigen::MatrixXd rhs(n, 3);
  for (int i = 0; i < n; ++i) {
    rhs(i, 0) = 1.0;
    rhs(i, 1) = i;
    rhs(i, 2) = std::cos(0.3 * i);
  }
  const Eigen::MatrixXd solved = toeplitz_solve(c, rhs);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd single = toeplitz_solve(c, Eigen::VectorXd(rhs.col(k)));
    CHECK((solved.col(k) - single).norm() <= 1e-12 * (1.0 + single.norm()));
  }
}

TEST_CASE("levinson rejects a singular toeplitz matrix") {
  Eigen::VectorXd c(3);
  c << 1.0, 1.0, 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(toeplitz_solve(c, b), Error);
}

TEST_CASE("toeplitz matvec matches the dense product") {
  const int n = 100;
  const Eigen::VectorXd c = plwn_acov(n);
  const Eigen::MatrixXd t = toeplitz_from(c);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(1.3 * i);
  const Eigen::VectorXd y = toeplitz_matvec(c, x);
  CHECK((y - t * x).norm() <= 1e-10 * (1.0 + (t * x).norm()));
}

TEST_CASE("gapped toeplitz matvec equals the subset dense product") {
  const int grid = 60;
  const Eigen::VectorXd c = plwn_acov(grid);
  std::vector<std::ptrdiff_t> pos;
  for (int i = 0; i < grid; ++i) {
    if (i % 7 != 3) pos.push_back(i);  // irregular gaps, endpoints kept
  }
  const auto n = static_cast<Eigen::Index>(pos.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sub(i, j) = c[std::abs(pos[static_cast<std::size_t>(i)] -
                             pos[static_cast<std::size_t>(j)])];
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 0.5 - 0.01 * static_cast<double>(i);
  const Eigen::VectorXd y = gapped_toeplitz_matvec(c, pos, x);
  CHECK((y - sub * x).norm() <= 1e-10 * (1.0 + (sub * x).norm()));
}

TEST_CASE("cholesky reports the offending leading minor") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  try {
    cholesky_lower(bad);
    FAIL("expected a positive-definite error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_positive_definite);
    CHECK(std::string(e.what()).find("minor 2") != std::string::npos);
  }
}

TEST_CASE("spd sqrt squares back") {
  Eigen::MatrixXd s(3, 3);
  s << 4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0;
  const Eigen::MatrixXd root = spd_sqrt(s);
  CHECK((root * root - s).norm() <= 1e-12 * s.norm());
  const Eigen::MatrixXd inv_root = spd_inv_sqrt(s);
  CHECK((inv_root * s * inv_root - Eigen::MatrixXd::Identity(3, 3)).norm() <=
        1e-12);
}
