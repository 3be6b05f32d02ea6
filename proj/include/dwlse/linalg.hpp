#pragma once

// Small dense linear-algebra helpers shared by the estimator modules:
// tolerance-based symmetry/definiteness checks and Cholesky-backed solves.

#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace dwlse {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A matrix counts as symmetric when max|A - A^T| <= tol * (1 + max|A|).
template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a,
                  typename Derived::Scalar rel_tol = typename Derived::Scalar(1e-9)) {
  if (a.rows() != a.cols()) return false;
  if (a.rows() == 0) return true;
  const auto scale = typename Derived::Scalar(1) + a.cwiseAbs().maxCoeff();
  return (a.derived() - a.derived().transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& a) {
  return ((a.derived() + a.derived().transpose()) / typename Derived::Scalar(2)).eval();
}

// Symmetry plus a Cholesky factorization attempt.
template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(a)) return false;
  if (a.rows() == 0) return true;
  Eigen::LLT<MatrixX<Scalar>> llt(a.derived().eval());
  return llt.info() == Eigen::Success;
}

template <typename Derived>
bool is_positive_semidefinite(const Eigen::MatrixBase<Derived>& a,
                              typename Derived::Scalar rel_tol = typename Derived::Scalar(1e-9)) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(a)) return false;
  if (a.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrized(a), Eigen::EigenvaluesOnly);
  const Scalar scale = Scalar(1) + a.cwiseAbs().maxCoeff();
  return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

// Solve A X = B for symmetric positive definite A (only the lower triangle
// of A is referenced). Throws when the factorization fails.
template <typename Scalar, typename Rhs>
auto solve_spd(const MatrixX<Scalar>& a, const Rhs& b, const std::string& context) {
  Eigen::LLT<MatrixX<Scalar>> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(context + ": matrix is singular or not positive definite");
  }
  return llt.solve(b).eval();
}

// Inverse of a symmetric positive definite matrix via solve-against-identity.
template <typename Scalar>
MatrixX<Scalar> spd_inverse(const MatrixX<Scalar>& a, const std::string& context) {
  return solve_spd(a, MatrixX<Scalar>::Identity(a.rows(), a.cols()), context);
}

}  // namespace dwlse
