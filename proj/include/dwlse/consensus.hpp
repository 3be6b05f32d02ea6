#pragma once

// The two iterative consensus engines behind the distributed estimator:
//
//  * ADMM on the consensus-constrained WLS problem, in its simplified form
//    where the per-edge auxiliary variables and multiplier pairs have been
//    eliminated and each node carries only its iterate x_s and the aggregate
//    multiplier lambda_s.
//  * The average-consensus (AC) diffusion that drives per-node matrices to
//    their network-wide mean.
//
// Every iteration is a synchronous map: all nodes read the previous snapshot
// and write the next one, so results do not depend on node visit order.

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dwlse/linalg.hpp"
#include "dwlse/network.hpp"

namespace dwlse {

// Per-node ADMM iterate: local estimate and aggregate Lagrange multiplier.
template <typename Scalar>
struct AdmmNodeState {
  VectorX<Scalar> x;
  VectorX<Scalar> lambda;
};

// Precomputed per-node problem data. meas_info and meas_vec are the sensor's
// information terms H^T R^-1 H and H^T R^-1 y; the prior enters the local
// cost down-weighted by 1/J.
template <typename Scalar>
struct AdmmNodeTerms {
  MatrixX<Scalar> meas_info;
  VectorX<Scalar> meas_vec;
  MatrixX<Scalar> prior_info;
  VectorX<Scalar> prior_mean;
};

template <typename Scalar>
struct AdmmProblemTerms {
  std::vector<AdmmNodeTerms<Scalar>> nodes;
  Scalar rho{};  // penalty parameter, > 0 for a meaningful iteration

  int node_count() const { return static_cast<int>(nodes.size()); }
  Eigen::Index dim() const { return nodes.empty() ? 0 : nodes.front().prior_mean.size(); }
};

namespace detail {

template <typename Scalar>
void check_admm_sizes(const AdmmProblemTerms<Scalar>& terms, const NetworkTopology& topo,
                      std::size_t state_count, const std::string& context) {
  if (terms.node_count() != topo.node_count()) {
    throw std::invalid_argument(context + ": terms cover " + std::to_string(terms.node_count()) +
                                " nodes but topology has " + std::to_string(topo.node_count()));
  }
  if (state_count != static_cast<std::size_t>(topo.node_count())) {
    throw std::invalid_argument(context + ": state count does not match node count");
  }
  const Eigen::Index m = terms.dim();
  for (const auto& t : terms.nodes) {
    if (t.prior_mean.size() != m || t.meas_vec.size() != m || t.meas_info.rows() != m ||
        t.meas_info.cols() != m || t.prior_info.rows() != m || t.prior_info.cols() != m) {
      throw std::invalid_argument(context + ": per-node term dimensions are inconsistent");
    }
  }
}

// Normal matrix of the local x subproblem; constant across iterations.
template <typename Scalar>
MatrixX<Scalar> admm_normal_matrix(const AdmmProblemTerms<Scalar>& terms,
                                   const AdmmNodeTerms<Scalar>& t, Scalar degree) {
  const Eigen::Index m = terms.dim();
  const Scalar inv_j = Scalar(1) / static_cast<Scalar>(terms.node_count());
  return Scalar(2) * terms.rho * degree * MatrixX<Scalar>::Identity(m, m) + t.meas_info +
         inv_j * t.prior_info;
}

// Constant part of the local right-hand side.
template <typename Scalar>
VectorX<Scalar> admm_rhs_base(const AdmmProblemTerms<Scalar>& terms,
                              const AdmmNodeTerms<Scalar>& t) {
  const Scalar inv_j = Scalar(1) / static_cast<Scalar>(terms.node_count());
  return t.meas_vec + inv_j * (t.prior_info * t.prior_mean);
}

}  // namespace detail

// One synchronous x update over all nodes, reading only the given snapshot:
//   x_s <- [2 rho J_s I + H^T R^-1 H + (1/J) Omega_s]^-1
//          [H^T R^-1 y + (1/J) Omega_s xhat_s - 2 lambda_s
//           + rho * sum_{j in N(s)} (x_s + x_j)]
template <typename Scalar>
std::vector<VectorX<Scalar>> admm_x_update(const AdmmProblemTerms<Scalar>& terms,
                                           const NetworkTopology& topo,
                                           const std::vector<AdmmNodeState<Scalar>>& states) {
  detail::check_admm_sizes(terms, topo, states.size(), "admm_x_update");
  const Eigen::Index m = terms.dim();
  std::vector<VectorX<Scalar>> next(states.size());
  for (int s = 0; s < topo.node_count(); ++s) {
    const auto& t = terms.nodes[s];
    const auto& nbrs = topo.neighbors(s);
    const MatrixX<Scalar> normal =
        detail::admm_normal_matrix(terms, t, static_cast<Scalar>(nbrs.size()));
    VectorX<Scalar> rhs = detail::admm_rhs_base(terms, t);
    rhs -= Scalar(2) * states[s].lambda;
    VectorX<Scalar> pair_sum = VectorX<Scalar>::Zero(m);
    for (int j : nbrs) pair_sum += states[s].x + states[j].x;
    rhs += terms.rho * pair_sum;
    next[s] = solve_spd(normal, rhs, "admm_x_update: singular per-node normal matrix");
  }
  return next;
}

// One synchronous multiplier update over all nodes:
//   lambda_s <- lambda_s + (rho/2) * sum_{j in N(s)} (x_s - x_j)
template <typename Scalar>
std::vector<VectorX<Scalar>> admm_lambda_update(const NetworkTopology& topo,
                                                const std::vector<AdmmNodeState<Scalar>>& states,
                                                Scalar rho) {
  if (states.size() != static_cast<std::size_t>(topo.node_count())) {
    throw std::invalid_argument("admm_lambda_update: state count does not match node count");
  }
  std::vector<VectorX<Scalar>> next(states.size());
  for (int s = 0; s < topo.node_count(); ++s) {
    VectorX<Scalar> diff_sum = VectorX<Scalar>::Zero(states[s].x.size());
    for (int j : topo.neighbors(s)) diff_sum += states[s].x - states[j].x;
    next[s] = states[s].lambda + (rho / Scalar(2)) * diff_sum;
  }
  return next;
}

// Total pairwise deviation over the edge set (both directions), the
// disagreement diagnostic reported in traces.
template <typename Scalar>
Scalar disagreement(const NetworkTopology& topo, const std::vector<VectorX<Scalar>>& xs) {
  Scalar total = 0;
  for (int s = 0; s < topo.node_count(); ++s) {
    for (int j : topo.neighbors(s)) total += (xs[s] - xs[j]).norm();
  }
  return total;
}

template <typename Scalar>
struct AdmmRunOptions {
  bool keep_history = false;
  // When set, the multiplier step reads the x values computed in the same
  // iteration instead of the previous snapshot. Off by default: the standard
  // iteration uses only the previous snapshot for both updates.
  bool lambda_from_current_x = false;
  // When a centralized reference is supplied together with a stream, each
  // iteration emits CSV rows "iter,node,error_to_reference,disagreement".
  const VectorX<Scalar>* reference = nullptr;
  std::ostream* trace = nullptr;
};

template <typename Scalar>
struct AdmmRunResult {
  std::vector<AdmmNodeState<Scalar>> states;
  std::vector<std::vector<AdmmNodeState<Scalar>>> history;  // snapshots after each iteration
};

inline constexpr double kAdmmDivergenceLimit = 1e12;

// Runs the full ADMM recursion for a fixed iteration count. Multipliers start
// at zero; initial x values are supplied by the caller. Per-node normal
// matrices are factored once since they do not change across iterations.
template <typename Scalar>
AdmmRunResult<Scalar> admm_run(const AdmmProblemTerms<Scalar>& terms, const NetworkTopology& topo,
                               const std::vector<VectorX<Scalar>>& initial_x, int iterations,
                               const AdmmRunOptions<Scalar>& options = {}) {
  detail::check_admm_sizes(terms, topo, initial_x.size(), "admm_run");
  if (iterations < 1) {
    throw std::invalid_argument("admm_run: iteration count must be >= 1");
  }
  const Eigen::Index m = terms.dim();
  const int j_total = topo.node_count();

  std::vector<Eigen::LLT<MatrixX<Scalar>>> factors;
  factors.reserve(j_total);
  for (int s = 0; s < j_total; ++s) {
    const auto degree = static_cast<Scalar>(topo.neighbors(s).size());
    factors.emplace_back(detail::admm_normal_matrix(terms, terms.nodes[s], degree));
    if (factors.back().info() != Eigen::Success) {
      throw std::runtime_error("admm_run: singular normal matrix at node " + std::to_string(s));
    }
  }
  std::vector<VectorX<Scalar>> rhs_base(j_total);
  for (int s = 0; s < j_total; ++s) rhs_base[s] = detail::admm_rhs_base(terms, terms.nodes[s]);

  std::vector<AdmmNodeState<Scalar>> states(j_total);
  for (int s = 0; s < j_total; ++s) {
    states[s].x = initial_x[s];
    states[s].lambda = VectorX<Scalar>::Zero(m);
  }

  AdmmRunResult<Scalar> result;
  if (options.keep_history) result.history.reserve(iterations);

  std::vector<VectorX<Scalar>> new_x(j_total);
  VectorX<Scalar> rhs(m), pair_sum(m);
  for (int l = 1; l <= iterations; ++l) {
    for (int s = 0; s < j_total; ++s) {
      rhs = rhs_base[s];
      rhs -= Scalar(2) * states[s].lambda;
      pair_sum.setZero();
      for (int j : topo.neighbors(s)) pair_sum += states[s].x + states[j].x;
      rhs += terms.rho * pair_sum;
      new_x[s] = factors[s].solve(rhs);
      if (!(new_x[s].norm() <= Scalar(kAdmmDivergenceLimit))) {
        throw std::runtime_error("admm_run: iterate diverged at iteration " + std::to_string(l) +
                                 ", node " + std::to_string(s) +
                                 " (rho = " + std::to_string(static_cast<double>(terms.rho)) + ")");
      }
    }
    std::vector<VectorX<Scalar>> new_lambda;
    if (options.lambda_from_current_x) {
      std::vector<AdmmNodeState<Scalar>> mixed(j_total);
      for (int s = 0; s < j_total; ++s) mixed[s] = {new_x[s], states[s].lambda};
      new_lambda = admm_lambda_update(topo, mixed, terms.rho);
    } else {
      new_lambda = admm_lambda_update(topo, states, terms.rho);
    }
    for (int s = 0; s < j_total; ++s) {
      states[s].x = new_x[s];
      states[s].lambda = std::move(new_lambda[s]);
    }
    if (options.trace != nullptr && options.reference != nullptr) {
      const Scalar spread = disagreement(topo, new_x);
      for (int s = 0; s < j_total; ++s) {
        *options.trace << l << "," << s << "," << (states[s].x - *options.reference).norm() << ","
                       << spread << "\n";
      }
    }
    if (options.keep_history) result.history.push_back(states);
  }
  result.states = std::move(states);
  return result;
}

// Penalty heuristic for arbitrary desk-scale instances: the average sensor
// information per state dimension, spread over twice the maximum degree.
// The tracking scenario instead fixes rho in its configuration.
template <typename Scalar>
Scalar tuned_rho(const AdmmProblemTerms<Scalar>& terms, const NetworkTopology& topo) {
  if (terms.nodes.empty()) {
    throw std::invalid_argument("tuned_rho: no nodes");
  }
  Scalar trace_sum = 0;
  for (const auto& t : terms.nodes) trace_sum += t.meas_info.trace();
  const Scalar per_dim =
      trace_sum / (static_cast<Scalar>(terms.node_count()) * static_cast<Scalar>(terms.dim()));
  const auto dmax = static_cast<Scalar>(std::max(topo.max_degree(), 1));
  const Scalar rho = per_dim / (Scalar(2) * dmax);
  return rho > Scalar(0) ? rho : Scalar(1e-3);
}

namespace detail {

inline void check_ac_epsilon(const NetworkTopology& topo, double epsilon) {
  const int dmax = topo.max_degree();
  if (!(epsilon > 0.0) || (dmax > 0 && !(epsilon * dmax < 1.0))) {
    throw std::invalid_argument("average consensus: epsilon " + std::to_string(epsilon) +
                                " outside (0, 1/D_max) with D_max = " + std::to_string(dmax));
  }
}

template <typename Scalar>
void check_ac_values(const NetworkTopology& topo, const std::vector<MatrixX<Scalar>>& values) {
  if (values.size() != static_cast<std::size_t>(topo.node_count())) {
    throw std::invalid_argument("average consensus: value count does not match node count");
  }
  for (const auto& v : values) {
    if (v.rows() != values.front().rows() || v.cols() != values.front().cols()) {
      throw std::invalid_argument("average consensus: value dimensions differ across nodes");
    }
  }
}

}  // namespace detail

// One diffusion step: S_s <- S_s + epsilon * sum_{j in N(s)} (S_j - S_s).
// Conserves the network-wide sum; contracts toward the mean for
// epsilon in (0, 1/D_max).
template <typename Scalar>
std::vector<MatrixX<Scalar>> ac_step(const NetworkTopology& topo,
                                     const std::vector<MatrixX<Scalar>>& values, Scalar epsilon) {
  detail::check_ac_epsilon(topo, static_cast<double>(epsilon));
  detail::check_ac_values(topo, values);
  std::vector<MatrixX<Scalar>> next(values.size());
  for (int s = 0; s < topo.node_count(); ++s) {
    MatrixX<Scalar> acc = MatrixX<Scalar>::Zero(values[s].rows(), values[s].cols());
    for (int j : topo.neighbors(s)) acc += values[j] - values[s];
    next[s] = values[s] + epsilon * acc;
  }
  return next;
}

template <typename Scalar>
std::vector<MatrixX<Scalar>> ac_run(const NetworkTopology& topo,
                                    const std::vector<MatrixX<Scalar>>& initial, Scalar epsilon,
                                    int iterations) {
  detail::check_ac_epsilon(topo, static_cast<double>(epsilon));
  detail::check_ac_values(topo, initial);
  if (iterations < 0) {
    throw std::invalid_argument("ac_run: iteration count must be >= 0");
  }
  std::vector<MatrixX<Scalar>> values = initial;
  for (int t = 0; t < iterations; ++t) values = ac_step(topo, values, epsilon);
  return values;
}

}  // namespace dwlse
