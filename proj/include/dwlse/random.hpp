#pragma once

// Seed derivation and zero-mean noise sampling with a prescribed covariance.
// Run/stream seeds come from a stable hash so adding Monte Carlo runs never
// perturbs earlier ones.

#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "dwlse/linalg.hpp"

namespace dwlse {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (run + 0x1000000000000001ull));
  h = splitmix64(h ^ (stream + 0x2000000000000003ull));
  return h;
}

// Concrete noise generators. Both uniform and gaussian match the requested
// first and second moments; "none" yields exact zeros.
enum class NoiseKind { none, gaussian, uniform };

// Draws zero-mean vectors with covariance C by coloring unit-variance
// components through an eigendecomposition square root of C (valid for any
// positive semidefinite C).
template <typename Scalar>
class CovarianceSampler {
 public:
  CovarianceSampler(const MatrixX<Scalar>& cov, NoiseKind kind) : kind_(kind) {
    if (!is_symmetric(cov)) {
      throw std::invalid_argument("CovarianceSampler: covariance not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrized(cov));
    const Scalar tol = Scalar(1e-9) * (Scalar(1) + cov.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -tol) {
      throw std::invalid_argument("CovarianceSampler: covariance not positive semidefinite");
    }
    factor_ = es.eigenvectors() *
              es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal();
  }

  VectorX<Scalar> sample(std::mt19937_64& rng) {
    const Eigen::Index n = factor_.rows();
    if (kind_ == NoiseKind::none) return VectorX<Scalar>::Zero(n);
    VectorX<Scalar> unit(n);
    if (kind_ == NoiseKind::gaussian) {
      std::normal_distribution<Scalar> dist(Scalar(0), Scalar(1));
      for (Eigen::Index i = 0; i < n; ++i) unit[i] = dist(rng);
    } else {
      // uniform on [-sqrt(3), sqrt(3)]: zero mean, unit variance
      const Scalar half_width = std::sqrt(Scalar(3));
      std::uniform_real_distribution<Scalar> dist(-half_width, half_width);
      for (Eigen::Index i = 0; i < n; ++i) unit[i] = dist(rng);
    }
    return factor_ * unit;
  }

 private:
  MatrixX<Scalar> factor_;
  NoiseKind kind_;
};

}  // namespace dwlse
