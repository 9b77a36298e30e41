#pragma once

// Random-growth generator for spatially embedded transmission topologies.
//
// Nodes live in the unit square. An initial core of n0 nodes is joined by a
// Euclidean minimum spanning tree plus floor(n0 (1-s)(p+q)) redundant lines.
// Each growth step then either splits a random existing line at its midpoint
// (probability s) or places a new node, links it to its nearest neighbour,
// adds a redundant line from the new node with probability p, and one from a
// uniformly chosen existing node with probability q. Redundant lines go to
// the non-adjacent node maximising (d_G + 1)^r / d_spatial.

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridfrt/core_model.hpp"

namespace gridfrt::topogen {

struct GrowthConfig {
  int n_buses = 25;
  int n0 = 1;
  double p = 0.2;
  double q = 0.3;
  double r = 1.0 / 3.0;
  double s = 0.1;
  std::uint64_t rng_seed = 0;
  double mean_line_length_km = 50.0;

  void validate() const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Topology without electrical data.
struct Skeleton {
  std::vector<Point> nodes;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> lengths_km;  // one per edge

  [[nodiscard]] int size() const { return static_cast<int>(nodes.size()); }
};

Skeleton grow_topology(const GrowthConfig& cfg);

/// One pi-model line per skeleton edge with the template's per-km values and
/// the edge's own length.
std::vector<Line> assign_line_params(const Skeleton& skeleton, const LineParams& line_type,
                                     const PerUnitBase& base);

/// Grid-JSON-shaped export with kind "unassigned" placeholders.
nlohmann::json skeleton_to_json(const Skeleton& skeleton, const LineParams& line_type, const PerUnitBase& base);

}  // namespace gridfrt::topogen
