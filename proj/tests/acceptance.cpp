// Acceptance suite: one pass/fail line per criterion, exit status nonzero if
// any criterion fails. Criterion 7 invokes the CLI binary, so the suite takes
// its path plus the tracking scenario file as arguments.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "dwlse/cif.hpp"
#include "dwlse/consensus.hpp"
#include "dwlse/dwlse.hpp"
#include "dwlse/network.hpp"
#include "dwlse/scenario.hpp"
#include "dwlse/simkit.hpp"
#include "test_support.hpp"

using dwlse::MatrixX;
using dwlse::NetworkTopology;
using dwlse::SensorModel;
using dwlse::StateEstimate;
using dwlse::SystemModel;
using dwlse::VectorX;

namespace {

struct CriterionResult {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. WLS / information-filter equivalence on 200 random instances.
CriterionResult wls_if_equivalence() {
  auto rng = testsupport::rng_for(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 4);
    const int sensor_count = 1 + static_cast<int>(rng() % 5);
    const auto prior = testsupport::random_estimate(rng, m);
    std::vector<SensorModel<double>> sensors;
    std::vector<VectorX<double>> ys;
    for (int s = 0; s < sensor_count; ++s) {
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 3);
      sensors.push_back(testsupport::random_sensor(rng, n, m));
      ys.push_back(testsupport::random_vector(rng, n, 2.0));
    }
    const auto direct = dwlse::cif_measurement_update(prior, sensors, ys);
    const auto stacked = dwlse::wls_solve(dwlse::stack_wls(prior, sensors, ys));
    worst = std::max(worst, testsupport::rel_diff(stacked.mean, direct.mean));
    worst = std::max(worst, testsupport::rel_diff(stacked.info, direct.info));
  }
  return {worst <= 1e-9, "200 instances, max rel err " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 2. Single node, L=1, T=0: distributed estimator equals the centralized
//    filter bit for bit over 50 steps.
CriterionResult single_node_reduction() {
  SystemModel<double> sys;
  sys.F = MatrixX<double>::Identity(4, 4);
  sys.F(0, 2) = 1.0;
  sys.F(1, 3) = 1.0;
  sys.Q = VectorX<double>{{50.0, 50.0, 10.0, 10.0}}.asDiagonal();
  SensorModel<double> sensor;
  sensor.H = MatrixX<double>::Zero(2, 4);
  sensor.H(0, 0) = 1.0;
  sensor.H(1, 1) = 1.0;
  sensor.R = VectorX<double>{{200.0, 8.0}}.asDiagonal();
  StateEstimate<double> initial{VectorX<double>{{20.0, 20.0, 90.0, -80.0}},
                                VectorX<double>{{900.0, 900.0, 16.0, 16.0}}
                                    .cwiseInverse()
                                    .asDiagonal()};

  const NetworkTopology topo(1, {});
  const dwlse::DwlseConfig<double> cfg{0.002, 1, 0, 0.5};

  auto rng = testsupport::rng_for(1002);
  auto nodes = dwlse::dwlse_init(1, initial, sys);
  StateEstimate<double> cif_state = initial;
  StateEstimate<double> cif_pred = dwlse::cif_time_update(cif_state, sys);

  for (int k = 1; k <= 50; ++k) {
    const VectorX<double> y = testsupport::random_vector(rng, 2, 5000.0);
    nodes = dwlse::dwlse_step(nodes, topo, {sensor}, {y}, sys, cfg);
    cif_state = dwlse::cif_measurement_update(cif_pred, {sensor}, {y});
    cif_pred = dwlse::cif_time_update(cif_state, sys);
    if (!(nodes[0].estimate.mean == cif_state.mean && nodes[0].estimate.info == cif_state.info &&
          nodes[0].prediction.mean == cif_pred.mean && nodes[0].prediction.info == cif_pred.info)) {
      return {false, "mismatch at step " + std::to_string(k)};
    }
  }
  return {true, "50 steps bitwise identical"};
}

// ---------------------------------------------------------------------------
// 3 + 5. ADMM convergence to the centralized WLS solution, and multiplier
//        conservation at every iteration of the same instances.
struct AdmmCriteria {
  CriterionResult convergence;
  CriterionResult conservation;
};

AdmmCriteria admm_convergence_and_conservation() {
  auto rng = testsupport::rng_for(1003);
  double worst_err = 0.0;
  double worst_lambda_sum = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int j = 2 + static_cast<int>(rng() % 5);                      // J <= 6
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 3);    // m <= 3
    const NetworkTopology topo = testsupport::random_connected_topology(rng, j);
    const bool shared_prior = trial % 2 == 0;

    std::vector<SensorModel<double>> sensors;
    std::vector<VectorX<double>> ys;
    std::vector<StateEstimate<double>> priors;
    const auto common = testsupport::random_estimate(rng, m);
    for (int s = 0; s < j; ++s) {
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 2);
      sensors.push_back(testsupport::random_sensor(rng, n, m));
      ys.push_back(testsupport::random_vector(rng, n, 2.0));
      priors.push_back(shared_prior ? common : testsupport::random_estimate(rng, m));
    }

    dwlse::AdmmProblemTerms<double> terms;
    for (int s = 0; s < j; ++s) {
      const auto si = dwlse::sensor_information(sensors[s], ys[s]);
      terms.nodes.push_back({si.info, si.vec, priors[s].info, priors[s].mean});
    }
    terms.rho = dwlse::tuned_rho(terms, topo);

    // centralized oracle through the information filter on the aggregated prior
    MatrixX<double> info_bar = MatrixX<double>::Zero(m, m);
    VectorX<double> info_mean = VectorX<double>::Zero(m);
    for (int s = 0; s < j; ++s) {
      info_bar += priors[s].info / j;
      info_mean += priors[s].info * priors[s].mean / j;
    }
    const StateEstimate<double> aggregated{info_bar.inverse() * info_mean, info_bar};
    const VectorX<double> reference = dwlse::cif_measurement_update(aggregated, sensors, ys).mean;

    std::vector<VectorX<double>> init;
    for (const auto& t : terms.nodes) init.push_back(t.prior_mean);
    dwlse::AdmmRunOptions<double> opts;
    opts.keep_history = true;
    const auto result = dwlse::admm_run(terms, topo, init, 2000, opts);

    for (const auto& st : result.states) {
      worst_err = std::max(worst_err, testsupport::rel_diff(st.x, reference));
    }
    for (const auto& snapshot : result.history) {
      VectorX<double> sum = VectorX<double>::Zero(m);
      for (const auto& st : snapshot) sum += st.lambda;
      worst_lambda_sum = std::max(worst_lambda_sum, sum.cwiseAbs().maxCoeff());
    }
  }
  AdmmCriteria out;
  out.convergence = {worst_err <= 1e-5,
                     "20 instances, L=2000, max rel err vs oracle " + fmt(worst_err)};
  out.conservation = {worst_lambda_sum <= 1e-10,
                      "max |sum lambda| over all iterations " + fmt(worst_lambda_sum)};
  return out;
}

// ---------------------------------------------------------------------------
// 4. Average consensus reaches the true mean and conserves the sum.
CriterionResult average_consensus_correctness() {
  auto rng = testsupport::rng_for(1004);
  double worst_dev = 0.0;
  double worst_sum_drift = 0.0;
  const std::vector<NetworkTopology> topologies{
      NetworkTopology::line(8), NetworkTopology::star(12),
      dwlse::generate_geometric(20, 3500.0, 10000.0, 8000.0, 17)};
  for (const auto& topo : topologies) {
    const int j = topo.node_count();
    const Eigen::Index m = 3;
    std::vector<MatrixX<double>> values;
    MatrixX<double> average = MatrixX<double>::Zero(m, m);
    for (int s = 0; s < j; ++s) {
      values.push_back(dwlse::symmetrized(testsupport::random_matrix(rng, m, m)));
      average += values.back() / j;
    }
    MatrixX<double> initial_sum = MatrixX<double>::Zero(m, m);
    for (const auto& v : values) initial_sum += v;

    const double epsilon = 0.65 / topo.max_degree();
    for (int t = 0; t < 500; ++t) {
      values = dwlse::ac_step(topo, values, epsilon);
      MatrixX<double> sum = MatrixX<double>::Zero(m, m);
      for (const auto& v : values) sum += v;
      worst_sum_drift = std::max(worst_sum_drift, (sum - initial_sum).cwiseAbs().maxCoeff());
    }
    for (const auto& v : values) {
      worst_dev = std::max(worst_dev, (v - average).cwiseAbs().maxCoeff());
    }
  }
  const bool pass = worst_dev <= 1e-8 && worst_sum_drift <= 1e-12;
  return {pass, "line/star/geometric, max dev from average " + fmt(worst_dev) +
                    ", max sum drift " + fmt(worst_sum_drift)};
}

// ---------------------------------------------------------------------------
// 6. Tracking-scenario campaign trends across ADMM iteration counts.
CriterionResult campaign_trends(const dwlse::ScenarioConfig& cfg) {
  const auto rows = dwlse::sweep_iterations(cfg, {1, 5, 20, 50});
  const auto& l1 = rows[0];
  const auto& l5 = rows[1];
  const auto& l20 = rows[2];
  const auto& l50 = rows[3];

  const double mse_gap = std::abs(l5.dwlse_avg_mse - l50.dwlse_avg_mse) / l50.dwlse_avg_mse;
  const bool a = mse_gap <= 0.10;
  const bool b = l20.dwlse_avg_acee < l1.dwlse_avg_acee;
  const double cif_gap = std::abs(l50.dwlse_avg_mse - l50.cif_avg_mse) / l50.cif_avg_mse;
  const bool c = cif_gap <= 0.10;

  std::ostringstream detail;
  detail << "(a) MSE L5 " << fmt(l5.dwlse_avg_mse) << " vs L50 " << fmt(l50.dwlse_avg_mse)
         << " -> " << fmt(100.0 * mse_gap) << "% (<=10% " << (a ? "ok" : "VIOLATED") << "); "
         << "(b) ACEE L20 " << fmt(l20.dwlse_avg_acee) << " < L1 " << fmt(l1.dwlse_avg_acee)
         << " (" << (b ? "ok" : "VIOLATED") << "); "
         << "(c) MSE L50 vs CIF " << fmt(l50.cif_avg_mse) << " -> " << fmt(100.0 * cif_gap)
         << "% (<=10% " << (c ? "ok" : "VIOLATED") << ")";
  return {a && b && c, detail.str()};
}

// ---------------------------------------------------------------------------
// 7. Byte-identical CSV outputs across two CLI executions.
CriterionResult determinism(const std::string& cli, const std::string& scenario) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "dwlse_acceptance";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base);

  auto run_once = [&](const std::string& dir) {
    const std::string cmd = "\"" + cli + "\" simulate --scenario \"" + scenario +
                            "\" --runs 8 --out \"" + dir + "\" > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const std::string dir_a = (base / "a").string();
  const std::string dir_b = (base / "b").string();
  if (run_once(dir_a) != 0 || run_once(dir_b) != 0) {
    return {false, "CLI invocation failed"};
  }

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const char* name : {"mse.csv", "acee.csv", "truth.csv"}) {
    const std::string a = slurp(fs::path(dir_a) / name);
    const std::string b = slurp(fs::path(dir_b) / name);
    if (a.empty() || a != b) {
      return {false, std::string(name) + " differs between executions"};
    }
  }
  return {true, "mse.csv, acee.csv, truth.csv byte-identical"};
}

// ---------------------------------------------------------------------------
// 8. Fused information matrices stay symmetric positive definite through the
//    whole tracking campaign at L=20, T=10.
CriterionResult information_health(const dwlse::ScenarioConfig& base_cfg) {
  dwlse::ScenarioConfig cfg = base_cfg;
  cfg.admm_iters = 20;
  cfg.ac_iters = 10;

  long checked = 0;
  double min_eig = std::numeric_limits<double>::infinity();
  bool all_ok = true;
  const auto observer = [&](int, int, const std::vector<dwlse::DwlseNoded>& nodes) {
    for (const auto& node : nodes) {
      if (!dwlse::is_symmetric(node.estimate.info)) all_ok = false;
      Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(node.estimate.info,
                                                        Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      ++checked;
    }
  };
  dwlse::run_campaign(cfg, observer);
  const bool pass = all_ok && min_eig > 0.0;
  return {pass, std::to_string(checked) + " node-steps checked, min eigenvalue " + fmt(min_eig)};
}

int report(int index, const std::string& name, const CriterionResult& result, double seconds,
           double budget_seconds) {
  const bool in_budget = budget_seconds <= 0.0 || seconds < budget_seconds;
  const bool pass = result.pass && in_budget;
  std::printf("criterion %d (%s): %s  [%s; %.1f s%s]\n", index, name.c_str(),
              pass ? "PASS" : "FAIL", result.detail.c_str(), seconds,
              in_budget ? "" : " OVER BUDGET");
  std::fflush(stdout);
  return pass ? 0 : 1;
}

template <typename Fn>
std::pair<CriterionResult, double> timed(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult result = fn();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return {std::move(result), elapsed.count()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dwlse acceptance suite"};
  std::string cli_path;
  std::string scenario_path;
  app.add_option("--cli", cli_path, "Path to the dwlse_sim binary")->required();
  app.add_option("--scenario", scenario_path, "Path to the tracking scenario file")->required();
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  dwlse::ScenarioConfig scenario;
  try {
    scenario = dwlse::load_scenario_file(scenario_path);
  } catch (const std::exception& e) {
    std::printf("cannot load scenario: %s\n", e.what());
    return 1;
  }

  try {
    {
      auto [res, secs] = timed(wls_if_equivalence);
      failures += report(1, "WLS-information-filter equivalence", res, secs, 5.0);
    }
    {
      auto [res, secs] = timed(single_node_reduction);
      failures += report(2, "single-node exact reduction", res, secs, 1.0);
    }
    {
      const auto start = std::chrono::steady_clock::now();
      const AdmmCriteria admm = admm_convergence_and_conservation();
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      failures += report(3, "ADMM convergence to centralized WLS", admm.convergence,
                         elapsed.count(), 30.0);
      auto [res, secs] = timed(average_consensus_correctness);
      failures += report(4, "average-consensus correctness", res, secs, 5.0);
      failures += report(5, "multiplier conservation", admm.conservation, elapsed.count(), 0.0);
    }
    {
      auto [res, secs] = timed([&] { return campaign_trends(scenario); });
      failures += report(6, "tracking campaign trends", res, secs, 120.0);
    }
    {
      auto [res, secs] = timed([&] { return determinism(cli_path, scenario_path); });
      failures += report(7, "simulate determinism", res, secs, 0.0);
    }
    {
      auto [res, secs] = timed([&] { return information_health(scenario); });
      failures += report(8, "information-matrix health", res, secs, 0.0);
    }
  } catch (const std::exception& e) {
    std::printf("acceptance suite aborted: %s\n", e.what());
    return 1;
  }

  if (failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criterion check(s) failed\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
