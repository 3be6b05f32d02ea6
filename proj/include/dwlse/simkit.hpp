#pragma once

// Scenario simulation and evaluation harness: truth and measurement
// generation, Monte Carlo execution of the centralized and distributed
// estimators over identical data, and the MSE / ACEE metrics.
//
// Metric conventions: MSE_k,s is the Monte Carlo mean of the error norm
// ||xhat_k,s - x_k|| (a mean error norm, not a squared one); ACEE_k is the
// mean pairwise deviation between node estimates, averaged over runs.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dwlse/cif.hpp"
#include "dwlse/dwlse.hpp"
#include "dwlse/models.hpp"
#include "dwlse/network.hpp"
#include "dwlse/random.hpp"

namespace dwlse {

struct NetworkParams {
  int nodes = 1;
  double radius = 1.0;
  double region_width = 1.0;
  double region_height = 1.0;
  std::uint64_t seed = 0;
};

struct TurnEvent {
  int step = 0;
  double heading_change_deg = 0.0;
};

struct ScenarioConfig {
  double scan_time = 1.0;  // seconds per step
  int steps = 1;           // K

  SystemModel<double> system;
  SensorModel<double> sensor;                       // shared across nodes
  std::map<int, SensorModel<double>> sensor_overrides;  // optional per-node

  VectorX<double> initial_true_state;
  StateEstimate<double> initial_estimate;
  std::vector<TurnEvent> turns;

  NetworkParams network;

  double rho = 0.002;
  int admm_iters = 20;
  int ac_iters = 10;
  double epsilon_scale = 0.65;  // AC rate = epsilon_scale / D_max

  int runs = 1;  // Monte Carlo runs M
  std::uint64_t master_seed = 0;

  bool process_noise = true;
  NoiseKind measurement_noise = NoiseKind::gaussian;
};

inline void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("scenario: steps must be >= 1");
  if (cfg.runs < 1) throw std::invalid_argument("scenario: runs must be >= 1");
  if (cfg.scan_time <= 0.0) throw std::invalid_argument("scenario: scan_time must be positive");
  if (cfg.network.nodes < 1) throw std::invalid_argument("scenario: network nodes must be >= 1");
  if (!(cfg.epsilon_scale > 0.0 && cfg.epsilon_scale < 1.0)) {
    throw std::invalid_argument("scenario: epsilon_scale must lie in (0, 1)");
  }
  const Eigen::Index m = cfg.system.dim();
  if (cfg.initial_true_state.size() != m) {
    throw std::invalid_argument("scenario: initial_true_state dimension mismatch");
  }
  if (cfg.initial_estimate.mean.size() != m) {
    throw std::invalid_argument("scenario: initial estimate dimension mismatch");
  }
  int prev = -1;
  for (const auto& turn : cfg.turns) {
    if (turn.step <= prev) {
      throw std::invalid_argument("scenario: turn steps must be strictly increasing");
    }
    if (turn.step >= cfg.steps) {
      throw std::invalid_argument("scenario: turn step " + std::to_string(turn.step) +
                                  " must be < steps");
    }
    prev = turn.step;
  }
  if (!cfg.turns.empty() && m < 4) {
    throw std::invalid_argument("scenario: turns require a [px, py, vx, vy] state");
  }
  for (const auto& [node, sensor] : cfg.sensor_overrides) {
    if (node < 0 || node >= cfg.network.nodes) {
      throw std::invalid_argument("scenario: sensor override for node " + std::to_string(node) +
                                  " out of range");
    }
    (void)sensor;
  }
}

// The sensor assigned to each node: the shared template unless overridden.
inline std::vector<SensorModel<double>> sensors_for_nodes(const ScenarioConfig& cfg) {
  std::vector<SensorModel<double>> sensors(cfg.network.nodes, cfg.sensor);
  for (const auto& [node, sensor] : cfg.sensor_overrides) sensors[node] = sensor;
  return sensors;
}

struct TruthTrajectory {
  std::vector<VectorX<double>> states;   // x_0 ... x_K, process noise included
  std::vector<VectorX<double>> nominal;  // the same kinematics without noise
};

// Constant-velocity motion with instantaneous heading changes: at a turn step
// the velocity vector is rotated in place (speed preserved), then the state
// propagates through the dynamics with sampled process noise.
inline TruthTrajectory generate_truth(const ScenarioConfig& cfg, std::uint64_t seed) {
  validate_scenario(cfg);
  std::mt19937_64 rng(seed);
  CovarianceSampler<double> process(cfg.system.Q,
                                    cfg.process_noise ? NoiseKind::gaussian : NoiseKind::none);

  TruthTrajectory out;
  out.states.reserve(cfg.steps + 1);
  out.nominal.reserve(cfg.steps + 1);

  VectorX<double> x = cfg.initial_true_state;
  VectorX<double> nominal = cfg.initial_true_state;
  std::size_t next_turn = 0;
  for (int k = 0; k <= cfg.steps; ++k) {
    if (next_turn < cfg.turns.size() && cfg.turns[next_turn].step == k) {
      const double angle = cfg.turns[next_turn].heading_change_deg * std::numbers::pi / 180.0;
      const double c = std::cos(angle), s = std::sin(angle);
      Eigen::Matrix2d rot;
      rot << c, -s, s, c;
      x.segment<2>(2) = rot * x.segment<2>(2);
      nominal.segment<2>(2) = rot * nominal.segment<2>(2);
      ++next_turn;
    }
    out.states.push_back(x);
    out.nominal.push_back(nominal);
    if (k < cfg.steps) {
      x = cfg.system.F * x + process.sample(rng);
      nominal = cfg.system.F * nominal;
    }
  }
  return out;
}

// y_k,s = H_s x_k + v_k,s for k = 1..K, noise independent across steps and
// nodes. Returned as [k-1][s].
inline std::vector<std::vector<VectorX<double>>> generate_measurements(
    const TruthTrajectory& truth, const std::vector<SensorModel<double>>& sensors,
    NoiseKind noise, std::uint64_t seed) {
  if (truth.states.size() < 2) {
    throw std::invalid_argument("generate_measurements: trajectory has no steps");
  }
  std::mt19937_64 rng(seed);
  std::vector<CovarianceSampler<double>> samplers;
  samplers.reserve(sensors.size());
  for (const auto& sensor : sensors) samplers.emplace_back(sensor.R, noise);

  const int steps = static_cast<int>(truth.states.size()) - 1;
  std::vector<std::vector<VectorX<double>>> out(steps);
  for (int k = 1; k <= steps; ++k) {
    out[k - 1].reserve(sensors.size());
    for (std::size_t s = 0; s < sensors.size(); ++s) {
      out[k - 1].push_back(sensors[s].H * truth.states[k] + samplers[s].sample(rng));
    }
  }
  return out;
}

struct MetricSeries {
  Eigen::MatrixXd mse;     // steps x nodes
  Eigen::VectorXd acee;    // steps
  bool averaged_over_runs = false;
};

// Mean pairwise deviation between node estimates; zero for a single node.
inline double acee(const std::vector<VectorX<double>>& estimates) {
  const auto j = static_cast<int>(estimates.size());
  if (j < 2) return 0.0;
  double total = 0.0;
  for (int s = 0; s < j; ++s) {
    for (int t = 0; t < j; ++t) {
      if (s != t) total += (estimates[s] - estimates[t]).norm();
    }
  }
  return total / (static_cast<double>(j) * (j - 1));
}

struct CampaignResult {
  MetricSeries cif;    // single column (the centralized estimate)
  MetricSeries dwlse;  // one column per node
  TruthTrajectory first_run_truth;
  double epsilon = 0.0;  // resolved AC rate
  int max_degree = 0;
};

// Called after every distributed step with (run, step, nodes); used for
// estimate dumps and for health instrumentation.
using CampaignObserver =
    std::function<void(int run, int step, const std::vector<DwlseNode<double>>&)>;

// The communication graph the scenario runs on; a single node needs no
// geometric draw.
inline NetworkTopology scenario_topology(const ScenarioConfig& cfg) {
  if (cfg.network.nodes == 1) {
    return NetworkTopology(1, {});
  }
  return generate_geometric(cfg.network.nodes, cfg.network.radius, cfg.network.region_width,
                            cfg.network.region_height, cfg.network.seed);
}

inline constexpr std::uint64_t kTruthStream = 1;
inline constexpr std::uint64_t kMeasurementStream = 2;

// Runs M Monte Carlo repetitions of the scenario. Within a run both
// estimators consume the identical measurement sequence; all randomness is
// derived from (master_seed, run, stream).
inline CampaignResult run_campaign(const ScenarioConfig& cfg,
                                   const CampaignObserver& observer = {}) {
  validate_scenario(cfg);
  const std::vector<SensorModel<double>> sensors = sensors_for_nodes(cfg);
  validate_models(cfg.system, sensors);

  const NetworkTopology topo = scenario_topology(cfg);
  const int j = topo.node_count();
  const int dmax = topo.max_degree();
  const double epsilon = dmax > 0 ? cfg.epsilon_scale / dmax : cfg.epsilon_scale;
  const DwlseConfig<double> dcfg{cfg.rho, cfg.admm_iters, cfg.ac_iters, epsilon};
  validate_config(dcfg);

  CampaignResult result;
  result.epsilon = epsilon;
  result.max_degree = dmax;
  result.cif.mse = Eigen::MatrixXd::Zero(cfg.steps, 1);
  result.cif.acee = Eigen::VectorXd::Zero(cfg.steps);
  result.dwlse.mse = Eigen::MatrixXd::Zero(cfg.steps, j);
  result.dwlse.acee = Eigen::VectorXd::Zero(cfg.steps);

  for (int run = 0; run < cfg.runs; ++run) {
    const TruthTrajectory truth =
        generate_truth(cfg, derive_seed(cfg.master_seed, run, kTruthStream));
    const auto measurements = generate_measurements(
        truth, sensors, cfg.measurement_noise, derive_seed(cfg.master_seed, run, kMeasurementStream));
    if (run == 0) result.first_run_truth = truth;

    StateEstimate<double> cif_prediction = cif_time_update(cfg.initial_estimate, cfg.system);
    std::vector<DwlseNode<double>> nodes = dwlse_init(j, cfg.initial_estimate, cfg.system);

    for (int k = 1; k <= cfg.steps; ++k) {
      try {
        const StateEstimate<double> cif_state =
            cif_measurement_update(cif_prediction, sensors, measurements[k - 1]);
        result.cif.mse(k - 1, 0) += (cif_state.mean - truth.states[k]).norm();
        cif_prediction = cif_time_update(cif_state, cfg.system);

        nodes = dwlse_step(nodes, topo, sensors, measurements[k - 1], cfg.system, dcfg);
      } catch (const std::exception& e) {
        throw std::runtime_error("run " + std::to_string(run) + ", step " + std::to_string(k) +
                                 ": " + e.what());
      }
      std::vector<VectorX<double>> estimates(j);
      for (int s = 0; s < j; ++s) {
        estimates[s] = nodes[s].estimate.mean;
        result.dwlse.mse(k - 1, s) += (nodes[s].estimate.mean - truth.states[k]).norm();
      }
      result.dwlse.acee(k - 1) += acee(estimates);
      if (observer) observer(run, k, nodes);
    }
  }

  const double inv_runs = 1.0 / cfg.runs;
  result.cif.mse *= inv_runs;
  result.dwlse.mse *= inv_runs;
  result.dwlse.acee *= inv_runs;
  result.cif.averaged_over_runs = true;
  result.dwlse.averaged_over_runs = true;
  return result;
}

struct SweepRow {
  int admm_iters = 0;
  double dwlse_avg_mse = 0.0;   // time average, first node
  double dwlse_avg_acee = 0.0;  // time average
  double cif_avg_mse = 0.0;
  double cif_avg_acee = 0.0;    // zero by construction
};

// Re-runs the campaign for each ADMM iteration count and reports
// time-averaged metrics.
inline std::vector<SweepRow> sweep_iterations(const ScenarioConfig& cfg,
                                              const std::vector<int>& iteration_counts) {
  if (iteration_counts.empty()) {
    throw std::invalid_argument("sweep_iterations: iteration list is empty");
  }
  std::vector<SweepRow> rows;
  rows.reserve(iteration_counts.size());
  for (int l : iteration_counts) {
    ScenarioConfig run_cfg = cfg;
    run_cfg.admm_iters = l;
    const CampaignResult res = run_campaign(run_cfg);
    SweepRow row;
    row.admm_iters = l;
    row.dwlse_avg_mse = res.dwlse.mse.col(0).mean();
    row.dwlse_avg_acee = res.dwlse.acee.mean();
    row.cif_avg_mse = res.cif.mse.col(0).mean();
    row.cif_avg_acee = 0.0;
    rows.push_back(row);
  }
  return rows;
}

// --- CSV output ------------------------------------------------------------

namespace detail {

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

inline void write_mse_csv(std::ostream& out, const CampaignResult& result) {
  out << "step,node,estimator,value\n";
  for (int k = 0; k < result.cif.mse.rows(); ++k) {
    out << (k + 1) << ",0,cif," << detail::format_value(result.cif.mse(k, 0)) << "\n";
  }
  for (int k = 0; k < result.dwlse.mse.rows(); ++k) {
    for (int s = 0; s < result.dwlse.mse.cols(); ++s) {
      out << (k + 1) << "," << s << ",dwlse," << detail::format_value(result.dwlse.mse(k, s))
          << "\n";
    }
  }
}

inline void write_acee_csv(std::ostream& out, const CampaignResult& result) {
  out << "step,estimator,value\n";
  for (int k = 0; k < result.cif.acee.size(); ++k) {
    out << (k + 1) << ",cif," << detail::format_value(result.cif.acee(k)) << "\n";
  }
  for (int k = 0; k < result.dwlse.acee.size(); ++k) {
    out << (k + 1) << ",dwlse," << detail::format_value(result.dwlse.acee(k)) << "\n";
  }
}

// Truth of the first Monte Carlo run, for plotting against the estimates.
inline void write_truth_csv(std::ostream& out, const TruthTrajectory& truth) {
  out << "step,px,py,vx,vy\n";
  for (std::size_t k = 0; k < truth.states.size(); ++k) {
    const auto& x = truth.states[k];
    out << k;
    for (Eigen::Index i = 0; i < 4 && i < x.size(); ++i) out << "," << detail::format_value(x[i]);
    out << "\n";
  }
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "L,estimator,avg_mse,avg_acee\n";
  for (const auto& row : rows) {
    out << row.admm_iters << ",cif," << detail::format_value(row.cif_avg_mse) << ","
        << detail::format_value(row.cif_avg_acee) << "\n";
    out << row.admm_iters << ",dwlse," << detail::format_value(row.dwlse_avg_mse) << ","
        << detail::format_value(row.dwlse_avg_acee) << "\n";
  }
}

}  // namespace dwlse
