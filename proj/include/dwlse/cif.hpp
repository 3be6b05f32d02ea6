#pragma once

// Centralized information filter and the equivalent weighted-least-squares
// solve. Serves as the benchmark and correctness oracle for the distributed
// estimator.

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dwlse/linalg.hpp"
#include "dwlse/models.hpp"

namespace dwlse {

// Measurement update in information form:
//   info' = info + sum_s H_s^T R_s^-1 H_s
//   mean' = info'^-1 (info * mean + sum_s H_s^T R_s^-1 y_s)
// The collective update is accumulated from per-sensor terms instead of
// materializing the stacked matrices.
template <typename Scalar>
StateEstimate<Scalar> cif_measurement_update(const StateEstimate<Scalar>& prior,
                                             const std::vector<SensorModel<Scalar>>& sensors,
                                             const std::vector<VectorX<Scalar>>& measurements) {
  const Eigen::Index m = prior.mean.size();
  if (prior.info.rows() != m || prior.info.cols() != m) {
    throw std::invalid_argument("cif_measurement_update: prior info dimension mismatch");
  }
  if (sensors.size() != measurements.size()) {
    throw std::invalid_argument("cif_measurement_update: sensor/measurement count mismatch");
  }
  if (sensors.empty()) {
    return prior;
  }

  MatrixX<Scalar> info_gain = MatrixX<Scalar>::Zero(m, m);
  VectorX<Scalar> meas_gain = VectorX<Scalar>::Zero(m);
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    if (sensors[s].H.cols() != m) {
      throw std::invalid_argument("cif_measurement_update: sensor " + std::to_string(s) +
                                  " H column count mismatch");
    }
    const SensorInformation<Scalar> si = sensor_information(sensors[s], measurements[s]);
    info_gain += si.info;
    meas_gain += si.vec;
  }

  const MatrixX<Scalar> posterior_info = prior.info + info_gain;
  const VectorX<Scalar> rhs = prior.info * prior.mean + meas_gain;
  StateEstimate<Scalar> out;
  out.mean = solve_spd(posterior_info, rhs, "cif_measurement_update");
  out.info = symmetrized(posterior_info);
  return out;
}

// Time update:
//   mean' = F * mean
//   info' = (F info^-1 F^T + Q)^-1
// Both inversions go through an SPD solve against identity.
template <typename Scalar>
StateEstimate<Scalar> cif_time_update(const StateEstimate<Scalar>& post,
                                      const SystemModel<Scalar>& sys) {
  const Eigen::Index m = post.mean.size();
  if (sys.F.rows() != m || sys.F.cols() != m || sys.Q.rows() != m || sys.Q.cols() != m) {
    throw std::invalid_argument("cif_time_update: model dimension mismatch");
  }
  const MatrixX<Scalar> cov = spd_inverse(post.info, "cif_time_update (information matrix)");
  const MatrixX<Scalar> pred_cov = sys.F * cov * sys.F.transpose() + sys.Q;
  StateEstimate<Scalar> out;
  out.mean = sys.F * post.mean;
  out.info = symmetrized(spd_inverse(pred_cov, "cif_time_update (predicted covariance sum)"));
  return out;
}

// Closed-form minimizer of || obs - design * x ||^2_weight:
//   info = design^T weight design, mean = info^-1 design^T weight obs.
template <typename Scalar>
StateEstimate<Scalar> wls_solve(const StackedWlsProblem<Scalar>& problem) {
  if (problem.design.rows() != problem.obs.size() ||
      problem.weight.rows() != problem.obs.size() ||
      problem.weight.cols() != problem.obs.size()) {
    throw std::invalid_argument("wls_solve: inconsistent problem dimensions");
  }
  const MatrixX<Scalar> normal = problem.design.transpose() * problem.weight * problem.design;
  const VectorX<Scalar> rhs = problem.design.transpose() * (problem.weight * problem.obs);
  StateEstimate<Scalar> out;
  out.mean = solve_spd(normal, rhs, "wls_solve");
  out.info = symmetrized(normal);
  return out;
}

}  // namespace dwlse
