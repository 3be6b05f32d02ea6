#pragma once

// Sensor-network topology: an undirected, connected graph over node ids
// 0..J-1, with optional planar node positions when geometrically generated.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dwlse {

class NetworkTopology {
 public:
  // Builds from an undirected edge list. Duplicate and mirrored pairs are
  // accepted; self-loops and disconnected graphs are not.
  NetworkTopology(int node_count, const std::vector<std::pair<int, int>>& edges,
                  std::vector<Eigen::Vector2d> positions = {})
      : node_count_(node_count), adjacency_(static_cast<std::size_t>(std::max(node_count, 0))),
        positions_(std::move(positions)) {
    if (node_count < 1) {
      throw std::invalid_argument("NetworkTopology: node count must be positive");
    }
    if (!positions_.empty() && positions_.size() != static_cast<std::size_t>(node_count)) {
      throw std::invalid_argument("NetworkTopology: position count does not match node count");
    }
    for (const auto& [a, b] : edges) {
      if (a < 0 || a >= node_count || b < 0 || b >= node_count) {
        throw std::invalid_argument("NetworkTopology: edge (" + std::to_string(a) + ", " +
                                    std::to_string(b) + ") out of range");
      }
      if (a == b) {
        throw std::invalid_argument("NetworkTopology: self-loop at node " + std::to_string(a));
      }
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& nbrs : adjacency_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    if (!connected()) {
      throw std::invalid_argument("NetworkTopology: graph is not connected");
    }
  }

  int node_count() const { return node_count_; }

  // Neighbor set of node s, sorted ascending, never containing s itself.
  const std::vector<int>& neighbors(int s) const {
    check_node(s);
    return adjacency_[s];
  }

  int degree(int s) const {
    check_node(s);
    return static_cast<int>(adjacency_[s].size());
  }

  int max_degree() const {
    int d = 0;
    for (const auto& nbrs : adjacency_) d = std::max(d, static_cast<int>(nbrs.size()));
    return d;
  }

  bool has_positions() const { return !positions_.empty(); }

  const std::vector<Eigen::Vector2d>& positions() const { return positions_; }

  // One "s j" pair per line, 0-based ids, each undirected edge once (s < j).
  std::string edge_list() const {
    std::ostringstream out;
    for (int s = 0; s < node_count_; ++s) {
      for (int j : adjacency_[s]) {
        if (s < j) out << s << " " << j << "\n";
      }
    }
    return out.str();
  }

  static NetworkTopology line(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return NetworkTopology(n, edges);
  }

  static NetworkTopology star(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
    return NetworkTopology(n, edges);
  }

  static NetworkTopology complete(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return NetworkTopology(n, edges);
  }

 private:
  void check_node(int s) const {
    if (s < 0 || s >= node_count_) {
      throw std::out_of_range("NetworkTopology: node id " + std::to_string(s) +
                              " out of range [0, " + std::to_string(node_count_) + ")");
    }
  }

  bool connected() const {
    std::vector<char> seen(node_count_, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
      const int s = frontier.front();
      frontier.pop();
      for (int j : adjacency_[s]) {
        if (!seen[j]) {
          seen[j] = 1;
          ++reached;
          frontier.push(j);
        }
      }
    }
    return reached == node_count_;
  }

  int node_count_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<Eigen::Vector2d> positions_;
};

// Random geometric graph: nodes uniform in a width x height region, edges
// between pairs within the communication radius. Positions are redrawn until
// the graph comes out connected; deterministic for a given seed.
inline NetworkTopology generate_geometric(int node_count, double radius, double region_width,
                                          double region_height, std::uint64_t seed,
                                          int max_retries = 1000) {
  if (node_count < 1) {
    throw std::invalid_argument("generate_geometric: node count must be positive");
  }
  if (radius <= 0.0 || region_width <= 0.0 || region_height <= 0.0) {
    throw std::invalid_argument("generate_geometric: radius and region must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, region_width);
  std::uniform_real_distribution<double> uy(0.0, region_height);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<Eigen::Vector2d> positions(node_count);
    for (auto& p : positions) {
      p.x() = ux(rng);
      p.y() = uy(rng);
    }
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < node_count; ++i) {
      for (int j = i + 1; j < node_count; ++j) {
        if ((positions[i] - positions[j]).norm() <= radius) edges.emplace_back(i, j);
      }
    }
    try {
      return NetworkTopology(node_count, edges, std::move(positions));
    } catch (const std::invalid_argument&) {
      // disconnected draw; try again
    }
  }
  throw std::runtime_error("generate_geometric: no connected graph within " +
                           std::to_string(max_retries) + " retries (radius " +
                           std::to_string(radius) + " too small for the region?)");
}

}  // namespace dwlse
