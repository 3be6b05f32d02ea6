#pragma once

// Scenario files: a flat key/value text format, one [section] per
// sub-structure of ScenarioConfig. Matrices are whitespace-separated
// row-major number lists; `*_diag` keys give just the diagonal.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwlse/simkit.hpp"

namespace dwlse {
namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

struct ScenarioEntry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

using ScenarioSection = std::map<std::string, ScenarioEntry>;
using ScenarioText = std::map<std::string, ScenarioSection>;

inline ScenarioText read_scenario_text(std::istream& in) {
  ScenarioText text;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']') {
        throw std::invalid_argument("scenario line " + std::to_string(line_no) +
                                    ": malformed section header");
      }
      section = trim(stripped.substr(1, stripped.size() - 2));
      text[section];
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos || section.empty()) {
      throw std::invalid_argument("scenario line " + std::to_string(line_no) +
                                  ": expected 'key = value' inside a [section]");
    }
    const std::string key = trim(stripped.substr(0, eq));
    text[section][key] = {trim(stripped.substr(eq + 1)), line_no, false};
  }
  return text;
}

inline const ScenarioEntry& require_entry(const ScenarioText& text, const std::string& section,
                                          const std::string& key) {
  const auto sec = text.find(section);
  if (sec == text.end()) {
    throw std::invalid_argument("scenario: missing section [" + section + "]");
  }
  const auto entry = sec->second.find(key);
  if (entry == sec->second.end()) {
    throw std::invalid_argument("scenario: missing key '" + key + "' in [" + section + "]");
  }
  entry->second.used = true;
  return entry->second;
}

inline const ScenarioEntry* find_entry(const ScenarioText& text, const std::string& section,
                                       const std::string& key) {
  const auto sec = text.find(section);
  if (sec == text.end()) return nullptr;
  const auto entry = sec->second.find(key);
  if (entry == sec->second.end()) return nullptr;
  entry->second.used = true;
  return &entry->second;
}

inline std::vector<double> parse_numbers(const ScenarioEntry& entry, const std::string& what) {
  std::istringstream in(entry.value);
  std::vector<double> values;
  double v = 0.0;
  while (in >> v) values.push_back(v);
  if (!in.eof() || values.empty()) {
    throw std::invalid_argument("scenario line " + std::to_string(entry.line) + ": " + what +
                                " must be a list of numbers");
  }
  return values;
}

inline double parse_double(const ScenarioEntry& entry, const std::string& what) {
  const auto values = parse_numbers(entry, what);
  if (values.size() != 1) {
    throw std::invalid_argument("scenario line " + std::to_string(entry.line) + ": " + what +
                                " must be a single number");
  }
  return values.front();
}

inline long long parse_integer(const ScenarioEntry& entry, const std::string& what) {
  const double v = parse_double(entry, what);
  const auto rounded = static_cast<long long>(v);
  if (static_cast<double>(rounded) != v) {
    throw std::invalid_argument("scenario line " + std::to_string(entry.line) + ": " + what +
                                " must be an integer");
  }
  return rounded;
}

inline VectorX<double> parse_vector(const ScenarioEntry& entry, Eigen::Index size,
                                    const std::string& what) {
  const auto values = parse_numbers(entry, what);
  if (static_cast<Eigen::Index>(values.size()) != size) {
    throw std::invalid_argument("scenario line " + std::to_string(entry.line) + ": " + what +
                                " needs " + std::to_string(size) + " numbers, got " +
                                std::to_string(values.size()));
  }
  return Eigen::Map<const VectorX<double>>(values.data(), size);
}

inline MatrixX<double> parse_matrix(const ScenarioEntry& entry, Eigen::Index rows,
                                    Eigen::Index cols, const std::string& what) {
  const auto values = parse_numbers(entry, what);
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw std::invalid_argument("scenario line " + std::to_string(entry.line) + ": " + what +
                                " needs " + std::to_string(rows * cols) + " numbers (row-major " +
                                std::to_string(rows) + "x" + std::to_string(cols) + "), got " +
                                std::to_string(values.size()));
  }
  MatrixX<double> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[r * cols + c];
  return m;
}

// Accepts either `key` (full row-major matrix) or `key_diag` (diagonal).
inline MatrixX<double> parse_square_matrix(const ScenarioText& text, const std::string& section,
                                           const std::string& key, Eigen::Index dim) {
  if (const ScenarioEntry* full = find_entry(text, section, key)) {
    return parse_matrix(*full, dim, dim, "[" + section + "] " + key);
  }
  if (const ScenarioEntry* diag = find_entry(text, section, key + "_diag")) {
    return parse_vector(*diag, dim, "[" + section + "] " + key + "_diag").asDiagonal();
  }
  throw std::invalid_argument("scenario: need '" + key + "' or '" + key + "_diag' in [" + section +
                              "]");
}

inline SensorModel<double> parse_sensor(const ScenarioText& text, const std::string& section,
                                        Eigen::Index state_dim) {
  const Eigen::Index n = parse_integer(require_entry(text, section, "meas_dim"), "meas_dim");
  SensorModel<double> sensor;
  sensor.H = parse_matrix(require_entry(text, section, "h"), n, state_dim, "[" + section + "] h");
  sensor.R = parse_square_matrix(text, section, "r", n);
  return sensor;
}

inline NoiseKind parse_noise_kind(const ScenarioEntry& entry) {
  if (entry.value == "gaussian") return NoiseKind::gaussian;
  if (entry.value == "uniform") return NoiseKind::uniform;
  if (entry.value == "off" || entry.value == "none") return NoiseKind::none;
  throw std::invalid_argument("scenario line " + std::to_string(entry.line) +
                              ": measurement_noise must be gaussian, uniform, or off");
}

inline bool parse_on_off(const ScenarioEntry& entry, const std::string& what) {
  if (entry.value == "on" || entry.value == "true") return true;
  if (entry.value == "off" || entry.value == "false") return false;
  throw std::invalid_argument("scenario line " + std::to_string(entry.line) + ": " + what +
                              " must be on or off");
}

inline std::vector<TurnEvent> parse_turns(const ScenarioEntry& entry) {
  std::vector<TurnEvent> turns;
  std::istringstream in(entry.value);
  std::string token;
  while (in >> token) {
    const std::size_t colon = token.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("scenario line " + std::to_string(entry.line) +
                                  ": turns must be step:degrees pairs");
    }
    try {
      turns.push_back({std::stoi(token.substr(0, colon)), std::stod(token.substr(colon + 1))});
    } catch (const std::exception&) {
      throw std::invalid_argument("scenario line " + std::to_string(entry.line) +
                                  ": malformed turn '" + token + "'");
    }
  }
  return turns;
}

}  // namespace detail

inline ScenarioConfig load_scenario(std::istream& in) {
  using namespace detail;
  const ScenarioText text = read_scenario_text(in);
  ScenarioConfig cfg;

  cfg.scan_time = parse_double(require_entry(text, "time", "scan_time"), "scan_time");
  cfg.steps = static_cast<int>(parse_integer(require_entry(text, "time", "steps"), "steps"));

  const auto m =
      static_cast<Eigen::Index>(parse_integer(require_entry(text, "system", "state_dim"), "state_dim"));
  cfg.system.F = parse_matrix(require_entry(text, "system", "f"), m, m, "[system] f");
  cfg.system.Q = parse_square_matrix(text, "system", "q", m);

  cfg.sensor = parse_sensor(text, "sensor", m);

  cfg.initial_true_state =
      parse_vector(require_entry(text, "truth", "initial_state"), m, "initial_state");
  if (const ScenarioEntry* turns = find_entry(text, "truth", "turns")) {
    cfg.turns = parse_turns(*turns);
  }
  if (const ScenarioEntry* pn = find_entry(text, "truth", "process_noise")) {
    cfg.process_noise = parse_on_off(*pn, "process_noise");
  }
  if (const ScenarioEntry* mn = find_entry(text, "truth", "measurement_noise")) {
    cfg.measurement_noise = parse_noise_kind(*mn);
  }

  cfg.initial_estimate.mean =
      parse_vector(require_entry(text, "estimator", "initial_mean"), m, "initial_mean");
  if (const ScenarioEntry* cov_diag = find_entry(text, "estimator", "initial_cov_diag")) {
    const VectorX<double> diag = parse_vector(*cov_diag, m, "initial_cov_diag");
    if (diag.minCoeff() <= 0.0) {
      throw std::invalid_argument("scenario line " + std::to_string(cov_diag->line) +
                                  ": initial_cov_diag entries must be positive");
    }
    cfg.initial_estimate.info = diag.cwiseInverse().asDiagonal();
  } else {
    cfg.initial_estimate.info = parse_square_matrix(text, "estimator", "initial_info", m);
  }

  cfg.network.nodes =
      static_cast<int>(parse_integer(require_entry(text, "network", "nodes"), "nodes"));
  cfg.network.radius = parse_double(require_entry(text, "network", "radius"), "radius");
  const VectorX<double> region =
      parse_vector(require_entry(text, "network", "region"), 2, "region");
  cfg.network.region_width = region[0];
  cfg.network.region_height = region[1];
  cfg.network.seed =
      static_cast<std::uint64_t>(parse_integer(require_entry(text, "network", "seed"), "seed"));

  cfg.rho = parse_double(require_entry(text, "dwlse", "rho"), "rho");
  cfg.admm_iters =
      static_cast<int>(parse_integer(require_entry(text, "dwlse", "admm_iters"), "admm_iters"));
  cfg.ac_iters =
      static_cast<int>(parse_integer(require_entry(text, "dwlse", "ac_iters"), "ac_iters"));
  cfg.epsilon_scale =
      parse_double(require_entry(text, "dwlse", "epsilon_scale"), "epsilon_scale");

  cfg.runs = static_cast<int>(parse_integer(require_entry(text, "montecarlo", "runs"), "runs"));
  cfg.master_seed = static_cast<std::uint64_t>(
      parse_integer(require_entry(text, "montecarlo", "master_seed"), "master_seed"));

  // Per-node sensor overrides live in [sensor:<id>] sections.
  for (const auto& [section, entries] : text) {
    if (section.rfind("sensor:", 0) == 0) {
      int node = -1;
      try {
        node = std::stoi(section.substr(7));
      } catch (const std::exception&) {
        throw std::invalid_argument("scenario: malformed section [" + section + "]");
      }
      cfg.sensor_overrides[node] = parse_sensor(text, section, m);
    }
  }

  // Reject typos rather than silently ignoring them.
  static const std::map<std::string, bool> known_sections = {
      {"time", true},     {"system", true}, {"sensor", true},     {"truth", true},
      {"estimator", true}, {"network", true}, {"dwlse", true},     {"montecarlo", true}};
  for (const auto& [section, entries] : text) {
    const bool sensor_override = section.rfind("sensor:", 0) == 0;
    if (!sensor_override && known_sections.find(section) == known_sections.end()) {
      throw std::invalid_argument("scenario: unknown section [" + section + "]");
    }
    for (const auto& [key, entry] : entries) {
      if (!entry.used) {
        throw std::invalid_argument("scenario line " + std::to_string(entry.line) +
                                    ": unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  validate_scenario(cfg);
  return cfg;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario file '" + path + "'");
  }
  try {
    return load_scenario(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

namespace detail {

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_numbers(std::ostream& out, const std::string& key, const MatrixX<double>& m) {
  out << key << " =";
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << " " << format_full(m(r, c));
  out << "\n";
}

inline void write_sensor(std::ostream& out, const SensorModel<double>& sensor) {
  out << "meas_dim = " << sensor.H.rows() << "\n";
  write_numbers(out, "h", sensor.H);
  write_numbers(out, "r", sensor.R);
}

}  // namespace detail

inline void save_scenario(std::ostream& out, const ScenarioConfig& cfg) {
  using namespace detail;
  out << "[time]\n";
  out << "scan_time = " << format_full(cfg.scan_time) << "\n";
  out << "steps = " << cfg.steps << "\n\n";

  out << "[system]\n";
  out << "state_dim = " << cfg.system.dim() << "\n";
  write_numbers(out, "f", cfg.system.F);
  write_numbers(out, "q", cfg.system.Q);
  out << "\n[sensor]\n";
  write_sensor(out, cfg.sensor);
  for (const auto& [node, sensor] : cfg.sensor_overrides) {
    out << "\n[sensor:" << node << "]\n";
    write_sensor(out, sensor);
  }

  out << "\n[truth]\n";
  write_numbers(out, "initial_state", cfg.initial_true_state);
  if (!cfg.turns.empty()) {
    out << "turns =";
    for (const auto& turn : cfg.turns) {
      out << " " << turn.step << ":" << format_full(turn.heading_change_deg);
    }
    out << "\n";
  }
  out << "process_noise = " << (cfg.process_noise ? "on" : "off") << "\n";
  out << "measurement_noise = "
      << (cfg.measurement_noise == NoiseKind::gaussian
              ? "gaussian"
              : (cfg.measurement_noise == NoiseKind::uniform ? "uniform" : "off"))
      << "\n";

  out << "\n[estimator]\n";
  write_numbers(out, "initial_mean", cfg.initial_estimate.mean);
  write_numbers(out, "initial_info", cfg.initial_estimate.info);

  out << "\n[network]\n";
  out << "nodes = " << cfg.network.nodes << "\n";
  out << "radius = " << format_full(cfg.network.radius) << "\n";
  out << "region = " << format_full(cfg.network.region_width) << " "
      << format_full(cfg.network.region_height) << "\n";
  out << "seed = " << cfg.network.seed << "\n";

  out << "\n[dwlse]\n";
  out << "rho = " << format_full(cfg.rho) << "\n";
  out << "admm_iters = " << cfg.admm_iters << "\n";
  out << "ac_iters = " << cfg.ac_iters << "\n";
  out << "epsilon_scale = " << format_full(cfg.epsilon_scale) << "\n";

  out << "\n[montecarlo]\n";
  out << "runs = " << cfg.runs << "\n";
  out << "master_seed = " << cfg.master_seed << "\n";
}

}  // namespace dwlse
