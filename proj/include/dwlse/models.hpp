#pragma once

// Linear-Gaussian system and sensor model types, their structural validation,
// and the stacked weighted-least-squares form of a measurement update.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dwlse/linalg.hpp"

namespace dwlse {

template <typename Scalar>
using StateVector = VectorX<Scalar>;

// Dynamics x_{k+1} = F x_k + w_k, Cov(w) = Q. Shared by all nodes.
template <typename Scalar>
struct SystemModel {
  MatrixX<Scalar> F;
  MatrixX<Scalar> Q;

  Eigen::Index dim() const { return F.rows(); }
};

// Per-node observation y = H x + v, Cov(v) = R.
template <typename Scalar>
struct SensorModel {
  MatrixX<Scalar> H;
  MatrixX<Scalar> R;

  Eigen::Index meas_dim() const { return H.rows(); }
  Eigen::Index state_dim() const { return H.cols(); }
};

// State mean together with the information matrix (inverse error covariance).
template <typename Scalar>
struct StateEstimate {
  StateVector<Scalar> mean;
  MatrixX<Scalar> info;

  Eigen::Index dim() const { return mean.size(); }
};

// One measurement update written as a single weighted least-squares problem:
// obs = design * x + noise, with noise of zero mean and covariance noise_cov,
// weighted by the optimal weight = noise_cov^-1.
template <typename Scalar>
struct StackedWlsProblem {
  VectorX<Scalar> obs;        // [prior mean; y_1; ...; y_J]
  MatrixX<Scalar> design;     // [I; H_1; ...; H_J]
  MatrixX<Scalar> weight;     // blkdiag(prior info, R_1^-1, ..., R_J^-1)
  MatrixX<Scalar> noise_cov;  // blkdiag(prior covariance, R_1, ..., R_J)
};

template <typename Scalar>
struct ModelBundle {
  SystemModel<Scalar> system;
  std::vector<SensorModel<Scalar>> sensors;
};

using SystemModeld = SystemModel<double>;
using SensorModeld = SensorModel<double>;
using StateEstimated = StateEstimate<double>;

namespace detail {

inline std::string dim_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail

// Checks every structural invariant of the model set and returns it unchanged.
// Error messages name the offending matrix and the check that failed.
template <typename Scalar>
ModelBundle<Scalar> validate_models(const SystemModel<Scalar>& sys,
                                    const std::vector<SensorModel<Scalar>>& sensors) {
  const Eigen::Index m = sys.F.rows();
  if (m == 0 || sys.F.cols() != m) {
    throw std::invalid_argument("validate_models: F must be square and non-empty, got " +
                                detail::dim_string(sys.F.rows(), sys.F.cols()));
  }
  if (sys.Q.rows() != m || sys.Q.cols() != m) {
    throw std::invalid_argument("validate_models: Q must be " + detail::dim_string(m, m) +
                                " to match F, got " + detail::dim_string(sys.Q.rows(), sys.Q.cols()));
  }
  if (!is_symmetric(sys.Q)) {
    throw std::invalid_argument("validate_models: Q not symmetric");
  }
  if (!is_positive_semidefinite(sys.Q)) {
    throw std::invalid_argument("validate_models: Q not positive semidefinite");
  }
  if (sensors.empty()) {
    throw std::invalid_argument("validate_models: at least one sensor required");
  }
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const auto& sensor = sensors[s];
    const std::string tag = "validate_models: sensor " + std::to_string(s) + ": ";
    if (sensor.H.rows() == 0 || sensor.H.cols() != m) {
      throw std::invalid_argument(tag + "H must have " + std::to_string(m) + " columns, got " +
                                  detail::dim_string(sensor.H.rows(), sensor.H.cols()));
    }
    if (sensor.R.rows() != sensor.H.rows() || sensor.R.cols() != sensor.H.rows()) {
      throw std::invalid_argument(tag + "R must be " +
                                  detail::dim_string(sensor.H.rows(), sensor.H.rows()) + ", got " +
                                  detail::dim_string(sensor.R.rows(), sensor.R.cols()));
    }
    if (!is_symmetric(sensor.R)) {
      throw std::invalid_argument(tag + "R not symmetric");
    }
    if (!is_positive_definite(sensor.R)) {
      throw std::invalid_argument(tag + "R not positive definite");
    }
  }
  return ModelBundle<Scalar>{sys, sensors};
}

// H^T R^-1 H and H^T R^-1 y for one sensor; the additive terms every
// information-form update is built from.
template <typename Scalar>
struct SensorInformation {
  MatrixX<Scalar> info;  // H^T R^-1 H, symmetrized
  VectorX<Scalar> vec;   // H^T R^-1 y
};

template <typename Scalar>
SensorInformation<Scalar> sensor_information(const SensorModel<Scalar>& sensor,
                                             const VectorX<Scalar>& y) {
  if (y.size() != sensor.H.rows()) {
    throw std::invalid_argument("sensor_information: measurement has size " +
                                std::to_string(y.size()) + ", expected " +
                                std::to_string(sensor.H.rows()));
  }
  Eigen::LLT<MatrixX<Scalar>> llt(sensor.R);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("sensor_information: R is singular or not positive definite");
  }
  SensorInformation<Scalar> out;
  out.info = symmetrized(sensor.H.transpose() * llt.solve(sensor.H));
  out.vec = sensor.H.transpose() * llt.solve(y);
  return out;
}

// Stacks the prior and all sensor observations into one WLS problem.
template <typename Scalar>
StackedWlsProblem<Scalar> stack_wls(const StateEstimate<Scalar>& prior,
                                    const std::vector<SensorModel<Scalar>>& sensors,
                                    const std::vector<VectorX<Scalar>>& measurements) {
  const Eigen::Index m = prior.mean.size();
  if (prior.info.rows() != m || prior.info.cols() != m) {
    throw std::invalid_argument("stack_wls: prior info must be " + detail::dim_string(m, m) +
                                ", got " + detail::dim_string(prior.info.rows(), prior.info.cols()));
  }
  if (sensors.size() != measurements.size()) {
    throw std::invalid_argument("stack_wls: " + std::to_string(sensors.size()) + " sensors but " +
                                std::to_string(measurements.size()) + " measurements");
  }
  Eigen::Index total = m;
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    if (sensors[s].H.cols() != m) {
      throw std::invalid_argument("stack_wls: sensor " + std::to_string(s) + " H has " +
                                  std::to_string(sensors[s].H.cols()) + " columns, expected " +
                                  std::to_string(m));
    }
    if (measurements[s].size() != sensors[s].H.rows()) {
      throw std::invalid_argument("stack_wls: measurement " + std::to_string(s) + " has size " +
                                  std::to_string(measurements[s].size()) + ", expected " +
                                  std::to_string(sensors[s].H.rows()));
    }
    total += sensors[s].H.rows();
  }

  StackedWlsProblem<Scalar> p;
  p.obs = VectorX<Scalar>::Zero(total);
  p.design = MatrixX<Scalar>::Zero(total, m);
  p.weight = MatrixX<Scalar>::Zero(total, total);
  p.noise_cov = MatrixX<Scalar>::Zero(total, total);

  p.obs.head(m) = prior.mean;
  p.design.topRows(m) = MatrixX<Scalar>::Identity(m, m);
  p.weight.topLeftCorner(m, m) = prior.info;
  p.noise_cov.topLeftCorner(m, m) = symmetrized(spd_inverse(prior.info, "stack_wls (prior info)"));

  Eigen::Index row = m;
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const Eigen::Index n = sensors[s].H.rows();
    p.obs.segment(row, n) = measurements[s];
    p.design.block(row, 0, n, m) = sensors[s].H;
    p.weight.block(row, row, n, n) =
        symmetrized(spd_inverse(sensors[s].R, "stack_wls (sensor " + std::to_string(s) + " R)"));
    p.noise_cov.block(row, row, n, n) = sensors[s].R;
    row += n;
  }
  return p;
}

}  // namespace dwlse
