#pragma once

// The per-timestep distributed WLS estimator. Each node holds a filtering
// estimate and a one-step prediction; a step runs the ADMM consensus on the
// local WLS subproblems, fuses the information matrices through average
// consensus, and predicts forward:
//
//   x_s^0 = predicted mean,   lambda_s^0 = 0
//   xhat_s <- x_s^L                       (ADMM, L iterations)
//   Omega_s <- J * S_s^T + prior info     (AC on H^T R^-1 H, T iterations)
//   predict with the shared dynamics, identically to the centralized filter.

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "dwlse/cif.hpp"
#include "dwlse/consensus.hpp"
#include "dwlse/linalg.hpp"
#include "dwlse/models.hpp"
#include "dwlse/network.hpp"

namespace dwlse {

template <typename Scalar>
struct DwlseConfig {
  Scalar rho{};       // ADMM penalty, > 0
  int admm_iters{};   // L >= 1
  int ac_iters{};     // T >= 0
  Scalar epsilon{};   // AC rate, in (0, 1/D_max) of the topology in use
};

template <typename Scalar>
struct DwlseNode {
  int id{};
  StateEstimate<Scalar> estimate;    // filtering estimate (mean, info)
  StateEstimate<Scalar> prediction;  // one-step-ahead prediction
};

using DwlseConfigd = DwlseConfig<double>;
using DwlseNoded = DwlseNode<double>;

template <typename Scalar>
void validate_config(const DwlseConfig<Scalar>& cfg) {
  if (!(cfg.rho > Scalar(0))) {
    throw std::invalid_argument("DwlseConfig: rho must be positive");
  }
  if (cfg.admm_iters < 1) {
    throw std::invalid_argument("DwlseConfig: admm_iters must be >= 1");
  }
  if (cfg.ac_iters < 0) {
    throw std::invalid_argument("DwlseConfig: ac_iters must be >= 0");
  }
  if (!(cfg.epsilon > Scalar(0))) {
    throw std::invalid_argument("DwlseConfig: epsilon must be positive");
  }
}

// All nodes start from the same estimate; the first prediction is one time
// update of it, so the first measurement step sees a proper prior.
template <typename Scalar>
std::vector<DwlseNode<Scalar>> dwlse_init(int node_count, const StateEstimate<Scalar>& initial,
                                          const SystemModel<Scalar>& sys) {
  if (node_count < 1) {
    throw std::invalid_argument("dwlse_init: node count must be positive");
  }
  if (!is_symmetric(initial.info) || !is_positive_definite(initial.info)) {
    throw std::invalid_argument("dwlse_init: initial information matrix not symmetric positive definite");
  }
  const StateEstimate<Scalar> prediction = cif_time_update(initial, sys);
  std::vector<DwlseNode<Scalar>> nodes(node_count);
  for (int s = 0; s < node_count; ++s) nodes[s] = {s, initial, prediction};
  return nodes;
}

// Assembles the per-node ADMM terms from each node's own prediction and its
// sensor/measurement pair.
template <typename Scalar>
AdmmProblemTerms<Scalar> build_admm_terms(const std::vector<DwlseNode<Scalar>>& nodes,
                                          const std::vector<SensorModel<Scalar>>& sensors,
                                          const std::vector<VectorX<Scalar>>& measurements,
                                          Scalar rho) {
  if (sensors.size() != nodes.size() || measurements.size() != nodes.size()) {
    throw std::invalid_argument("build_admm_terms: need one sensor and one measurement per node");
  }
  AdmmProblemTerms<Scalar> terms;
  terms.rho = rho;
  terms.nodes.reserve(nodes.size());
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    const SensorInformation<Scalar> si = sensor_information(sensors[s], measurements[s]);
    terms.nodes.push_back({si.info, si.vec, nodes[s].prediction.info, nodes[s].prediction.mean});
  }
  return terms;
}

// Identical contract to the centralized time update, applied per node.
template <typename Scalar>
DwlseNode<Scalar> dwlse_predict(const DwlseNode<Scalar>& node, const SystemModel<Scalar>& sys) {
  DwlseNode<Scalar> out = node;
  out.prediction = cif_time_update(node.estimate, sys);
  return out;
}

// One full measurement-plus-prediction step for every node.
template <typename Scalar>
std::vector<DwlseNode<Scalar>> dwlse_step(const std::vector<DwlseNode<Scalar>>& nodes,
                                          const NetworkTopology& topo,
                                          const std::vector<SensorModel<Scalar>>& sensors,
                                          const std::vector<VectorX<Scalar>>& measurements,
                                          const SystemModel<Scalar>& sys,
                                          const DwlseConfig<Scalar>& cfg) {
  validate_config(cfg);
  if (nodes.size() != static_cast<std::size_t>(topo.node_count())) {
    throw std::invalid_argument("dwlse_step: node count does not match topology");
  }
  const auto j_total = static_cast<Scalar>(nodes.size());

  const AdmmProblemTerms<Scalar> terms = build_admm_terms(nodes, sensors, measurements, cfg.rho);

  std::vector<VectorX<Scalar>> initial_x(nodes.size());
  for (std::size_t s = 0; s < nodes.size(); ++s) initial_x[s] = nodes[s].prediction.mean;
  const AdmmRunResult<Scalar> admm = admm_run(terms, topo, initial_x, cfg.admm_iters);

  std::vector<MatrixX<Scalar>> gains(nodes.size());
  for (std::size_t s = 0; s < nodes.size(); ++s) gains[s] = terms.nodes[s].meas_info;
  const std::vector<MatrixX<Scalar>> fused_gain = ac_run(topo, gains, cfg.epsilon, cfg.ac_iters);

  std::vector<DwlseNode<Scalar>> out(nodes.size());
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    const MatrixX<Scalar> fused =
        symmetrized(j_total * fused_gain[s] + nodes[s].prediction.info);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(fused, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= Scalar(0)) {
      throw std::runtime_error("dwlse_step: node " + std::to_string(s) +
                               ": fused information matrix not positive definite");
    }
    out[s].id = nodes[s].id;
    out[s].estimate = {admm.states[s].x, fused};
    out[s] = dwlse_predict(out[s], sys);
  }
  return out;
}

// Per-step estimate dump: one row "step,node,<state components...>,info_trace"
// per node.
template <typename Scalar>
void append_estimate_rows(std::ostream& out, int step, const std::vector<DwlseNode<Scalar>>& nodes) {
  for (const auto& node : nodes) {
    out << step << "," << node.id;
    for (Eigen::Index i = 0; i < node.estimate.mean.size(); ++i) {
      out << "," << node.estimate.mean[i];
    }
    out << "," << node.estimate.info.trace() << "\n";
  }
}

}  // namespace dwlse
