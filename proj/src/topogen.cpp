#include "gridfrt/topogen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>

namespace gridfrt::topogen {

namespace {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

class GrowingGraph {
 public:
  void add_node(Point p) {
    nodes_.push_back(p);
    adj_.emplace_back();
  }

  void add_edge(int a, int b) {
    adj_[a].insert(b);
    adj_[b].insert(a);
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }

  void remove_edge(std::size_t index) {
    auto [a, b] = edges_[index];
    adj_[a].erase(b);
    adj_[b].erase(a);
    edges_.erase(edges_.begin() + static_cast<std::ptrdiff_t>(index));
  }

  [[nodiscard]] bool adjacent(int a, int b) const { return adj_[a].count(b) > 0; }
  [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] const std::vector<Point>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  [[nodiscard]] std::vector<int> hop_distances(int from) const {
    std::vector<int> dist(nodes_.size(), -1);
    std::queue<int> todo;
    dist[from] = 0;
    todo.push(from);
    while (!todo.empty()) {
      const int k = todo.front();
      todo.pop();
      for (int m : adj_[k]) {
        if (dist[m] < 0) {
          dist[m] = dist[k] + 1;
          todo.push(m);
        }
      }
    }
    return dist;
  }

  // Non-adjacent partner maximising (d_G + 1)^r / d_spatial, or -1.
  [[nodiscard]] int best_redundant_partner(int i, double r) const {
    const auto hops = hop_distances(i);
    int best = -1;
    double best_score = -1.0;
    for (int l = 0; l < size(); ++l) {
      if (l == i || adjacent(i, l)) continue;
      const double ds = distance(nodes_[i], nodes_[l]);
      if (!(ds > 0.0)) continue;
      // Unreachable nodes cannot occur in a connected graph; treat as far.
      const double dg = hops[l] < 0 ? static_cast<double>(size()) : hops[l];
      const double score = std::pow(dg + 1.0, r) / ds;
      if (score > best_score) {
        best_score = score;
        best = l;
      }
    }
    return best;
  }

  [[nodiscard]] int nearest(int i) const {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int l = 0; l < size(); ++l) {
      if (l == i) continue;
      const double d = distance(nodes_[i], nodes_[l]);
      if (d < best_d) {
        best_d = d;
        best = l;
      }
    }
    return best;
  }

 private:
  std::vector<Point> nodes_;
  std::vector<std::set<int>> adj_;
  std::vector<std::pair<int, int>> edges_;
};

void minimum_spanning_tree(GrowingGraph& g) {
  const int n = g.size();
  if (n < 2) return;
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  best[0] = 0.0;
  for (int iter = 0; iter < n; ++iter) {
    int k = -1;
    for (int i = 0; i < n; ++i) {
      if (!in_tree[i] && (k < 0 || best[i] < best[k])) k = i;
    }
    in_tree[k] = 1;
    if (parent[k] >= 0) g.add_edge(parent[k], k);
    for (int i = 0; i < n; ++i) {
      if (in_tree[i]) continue;
      const double d = distance(g.nodes()[k], g.nodes()[i]);
      if (d < best[i]) {
        best[i] = d;
        parent[i] = k;
      }
    }
  }
}

}  // namespace

void GrowthConfig::validate() const {
  if (n0 < 1 || n_buses < n0) throw GridError("growth config requires n_buses >= n0 >= 1");
  for (double prob : {p, q, s}) {
    if (!(prob >= 0.0 && prob <= 1.0)) throw GridError("growth probabilities must lie in [0, 1]");
  }
  if (!(r >= 0.0)) throw GridError("growth exponent r must be non-negative");
  if (!(mean_line_length_km > 0.0)) throw GridError("mean line length must be positive");
}

Skeleton grow_topology(const GrowthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto coin = [&](double prob) { return unit(rng) < prob; };

  GrowingGraph g;
  for (int i = 0; i < cfg.n0; ++i) g.add_node({unit(rng), unit(rng)});
  minimum_spanning_tree(g);
  const int initial_extra = static_cast<int>(std::floor(cfg.n0 * (1.0 - cfg.s) * (cfg.p + cfg.q)));
  for (int m = 0; m < initial_extra; ++m) {
    // Globally best non-adjacent pair.
    int bi = -1, bl = -1;
    double best = -1.0;
    for (int i = 0; i < g.size(); ++i) {
      const auto hops = g.hop_distances(i);
      for (int l = i + 1; l < g.size(); ++l) {
        if (g.adjacent(i, l)) continue;
        const double ds = distance(g.nodes()[i], g.nodes()[l]);
        if (!(ds > 0.0)) continue;
        const double score = std::pow(hops[l] + 1.0, cfg.r) / ds;
        if (score > best) {
          best = score;
          bi = i;
          bl = l;
        }
      }
    }
    if (bi < 0) break;
    g.add_edge(bi, bl);
  }

  while (g.size() < cfg.n_buses) {
    if (!g.edges().empty() && coin(cfg.s)) {
      std::uniform_int_distribution<std::size_t> pick(0, g.edges().size() - 1);
      const std::size_t e = pick(rng);
      const auto [a, b] = g.edges()[e];
      const Point mid{0.5 * (g.nodes()[a].x + g.nodes()[b].x), 0.5 * (g.nodes()[a].y + g.nodes()[b].y)};
      g.remove_edge(e);
      g.add_node(mid);
      const int n = g.size() - 1;
      g.add_edge(a, n);
      g.add_edge(n, b);
      continue;
    }
    g.add_node({unit(rng), unit(rng)});
    const int n = g.size() - 1;
    if (n == 0) continue;
    g.add_edge(n, g.nearest(n));
    if (coin(cfg.p)) {
      const int l = g.best_redundant_partner(n, cfg.r);
      if (l >= 0) g.add_edge(n, l);
    }
    if (coin(cfg.q)) {
      std::uniform_int_distribution<int> pick(0, n);
      const int i = pick(rng);
      const int l = g.best_redundant_partner(i, cfg.r);
      if (l >= 0) g.add_edge(i, l);
    }
  }

  Skeleton out;
  out.nodes = g.nodes();
  out.edges = g.edges();
  std::vector<double> raw;
  raw.reserve(out.edges.size());
  for (auto [a, b] : out.edges) raw.push_back(distance(out.nodes[a], out.nodes[b]));
  if (!raw.empty()) {
    const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(raw.size());
    const double scale = cfg.mean_line_length_km / mean;
    for (double d : raw) out.lengths_km.push_back(d * scale);
  }
  return out;
}

std::vector<Line> assign_line_params(const Skeleton& skeleton, const LineParams& line_type, const PerUnitBase& base) {
  std::vector<Line> lines;
  lines.reserve(skeleton.edges.size());
  for (std::size_t i = 0; i < skeleton.edges.size(); ++i) {
    LineParams lp = line_type;
    lp.length_km = skeleton.lengths_km.at(i);
    lines.push_back(make_line(skeleton.edges[i].first, skeleton.edges[i].second, lp, base));
  }
  return lines;
}

nlohmann::json skeleton_to_json(const Skeleton& skeleton, const LineParams& line_type, const PerUnitBase& base) {
  nlohmann::json buses = nlohmann::json::array();
  for (int i = 0; i < skeleton.size(); ++i) {
    buses.push_back({{"id", i},
                     {"kind", "unassigned"},
                     {"p_set", 0.0},
                     {"q_set", 0.0},
                     {"x", skeleton.nodes[i].x},
                     {"y", skeleton.nodes[i].y}});
  }
  nlohmann::json lines = nlohmann::json::array();
  for (std::size_t i = 0; i < skeleton.edges.size(); ++i) {
    lines.push_back({{"from", skeleton.edges[i].first},
                     {"to", skeleton.edges[i].second},
                     {"length", skeleton.lengths_km[i]},
                     {"r_per_km", line_type.r_per_km},
                     {"x_per_km", line_type.x_per_km},
                     {"c_sh_per_km", line_type.c_sh_per_km}});
  }
  return {{"base", {{"v_base", base.v_base_kv}, {"s_base", base.s_base_mw}, {"f_nominal", base.f_nominal_hz}}},
          {"buses", std::move(buses)},
          {"lines", std::move(lines)}};
}

}  // namespace gridfrt::topogen
