#include "gridfrt/core_model.hpp"

#include <cmath>
#include <numbers>
#include <queue>

namespace gridfrt {

void PerUnitBase::validate() const {
  if (!(v_base_kv > 0.0) || !(s_base_mw > 0.0) || !(f_nominal_hz > 0.0)) {
    throw GridError("per-unit base values must be strictly positive");
  }
}

void LineParams::validate() const {
  if (!(length_km > 0.0)) throw GridError("line length must be positive");
  if (!(r_per_km >= 0.0)) throw GridError("line resistance must be non-negative");
  if (!(x_per_km > 0.0)) throw GridError("line reactance must be positive");
  if (!(c_sh_per_km >= 0.0)) throw GridError("line shunt capacitance must be non-negative");
}

LineAdmittance line_admittance(const LineParams& params, const PerUnitBase& base) {
  params.validate();
  base.validate();
  const double zb = base.z_base_ohm();
  const Complex z{params.r_per_km * params.length_km / zb, params.x_per_km * params.length_km / zb};
  if (std::abs(z) == 0.0) throw GridError("zero-impedance line");
  const double omega = 2.0 * std::numbers::pi * base.f_nominal_hz;
  const double b_sh = omega * params.c_sh_per_km * 1e-9 * params.length_km * zb;
  return {1.0 / z, Complex{0.0, b_sh}};
}

Line make_line(int from, int to, const LineParams& params, const PerUnitBase& base) {
  if (from == to) throw GridError("line endpoints must differ");
  const auto adm = line_admittance(params, base);
  return Line{from, to, params, adm.y_series, adm.y_shunt};
}

std::string_view to_string(NormalFormLabel label) {
  switch (label) {
    case NormalFormLabel::NF1: return "NF1";
    case NormalFormLabel::NF2: return "NF2";
    case NormalFormLabel::NF3: return "NF3";
    case NormalFormLabel::Custom: return "custom";
  }
  return "custom";
}

NormalFormLabel normal_form_label_from_string(std::string_view s) {
  if (s == "NF1") return NormalFormLabel::NF1;
  if (s == "NF2") return NormalFormLabel::NF2;
  if (s == "NF3") return NormalFormLabel::NF3;
  if (s == "custom") return NormalFormLabel::Custom;
  throw GridError("unknown normal form label '" + std::string(s) + "'");
}

NormalFormParams NormalFormParams::from_real_parts(double re_b, double re_g, NormalFormLabel label) {
  NormalFormParams p;
  p.label = label;
  p.b_omega = re_b;
  p.g_omega = re_g;
  p.c_v = Complex{re_b, 0.0};
  p.h_v = Complex{re_g / 5.0, 0.0};
  return p;
}

NormalFormParams NormalFormParams::preset(NormalFormLabel label) {
  switch (label) {
    case NormalFormLabel::NF1: return from_real_parts(-1.0, -5.0, label);
    case NormalFormLabel::NF2: return from_real_parts(-2.0, -10.0, label);
    case NormalFormLabel::NF3: return from_real_parts(-0.2, -1.0, label);
    case NormalFormLabel::Custom: break;
  }
  throw GridError("no preset for custom normal form");
}

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::NormalForm: return "NormalForm";
    case BusKind::PQLoad: return "PQLoad";
    case BusKind::Slack: return "Slack";
  }
  return "PQLoad";
}

BusKind bus_kind_from_string(std::string_view s) {
  if (s == "NormalForm") return BusKind::NormalForm;
  if (s == "PQLoad") return BusKind::PQLoad;
  if (s == "Slack") return BusKind::Slack;
  throw GridError("unknown bus kind '" + std::string(s) + "'");
}

int Grid::slack_index() const {
  for (const auto& b : buses) {
    if (b.kind == BusKind::Slack) return b.id;
  }
  return -1;
}

std::vector<std::vector<int>> Grid::adjacency() const {
  std::vector<std::vector<int>> adj(buses.size());
  for (const auto& l : lines) {
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  return adj;
}

std::vector<Complex> OperatingPoint::voltages() const {
  std::vector<Complex> v;
  v.reserve(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i) v.push_back(voltage(static_cast<int>(i)));
  return v;
}

Eigen::MatrixXcd admittance_matrix(const Grid& grid) {
  const int n = grid.size();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& l : grid.lines) {
    const Complex half_shunt = 0.5 * l.y_shunt;
    y(l.from, l.from) += l.y_series + half_shunt;
    y(l.to, l.to) += l.y_series + half_shunt;
    y(l.from, l.to) -= l.y_series;
    y(l.to, l.from) -= l.y_series;
  }
  return y;
}

bool is_connected(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) continue;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = 1;
  int count = 1;
  while (!todo.empty()) {
    const int k = todo.front();
    todo.pop();
    for (int m : adj[k]) {
      if (!seen[m]) {
        seen[m] = 1;
        ++count;
        todo.push(m);
      }
    }
  }
  return count == n;
}

std::vector<std::string> validate_grid(const Grid& grid) {
  std::vector<std::string> out;
  const int n = grid.size();
  if (n == 0) {
    out.emplace_back("empty grid");
    return out;
  }
  int slacks = 0;
  for (int i = 0; i < n; ++i) {
    const Bus& b = grid.buses[i];
    if (b.id != i) out.push_back("bus ids not dense at position " + std::to_string(i));
    if (b.kind == BusKind::Slack) ++slacks;
    if (!std::isfinite(b.p_set) || !std::isfinite(b.q_set)) {
      out.push_back("non-finite set point at bus " + std::to_string(i));
    }
    if (b.kind != BusKind::PQLoad && !(b.v_set > 0.0)) {
      out.push_back("non-positive v_set at bus " + std::to_string(i));
    }
    if ((b.kind == BusKind::NormalForm) != b.params.has_value()) {
      out.push_back("normal form parameters inconsistent with kind at bus " + std::to_string(i));
    }
  }
  if (slacks == 0) out.emplace_back("no slack");
  if (slacks > 1) out.emplace_back("multiple slacks");

  std::vector<std::pair<int, int>> edges;
  bool endpoints_ok = true;
  for (std::size_t i = 0; i < grid.lines.size(); ++i) {
    const Line& l = grid.lines[i];
    if (l.from < 0 || l.to < 0 || l.from >= n || l.to >= n) {
      out.push_back("line " + std::to_string(i) + " endpoint out of range");
      endpoints_ok = false;
      continue;
    }
    if (l.from == l.to) out.push_back("line " + std::to_string(i) + " is a self loop");
    const bool finite = std::isfinite(l.y_series.real()) && std::isfinite(l.y_series.imag()) &&
                        std::isfinite(l.y_shunt.real()) && std::isfinite(l.y_shunt.imag());
    if (!finite || std::abs(l.y_series) == 0.0) {
      out.push_back("line " + std::to_string(i) + " has invalid admittance");
    }
    edges.emplace_back(l.from, l.to);
  }
  if (endpoints_ok && !is_connected(n, edges)) out.emplace_back("disconnected");
  return out;
}

void require_valid(const Grid& grid) {
  const auto violations = validate_grid(grid);
  if (violations.empty()) return;
  std::string msg = "invalid grid:";
  for (const auto& v : violations) msg += " " + v + ";";
  throw GridError(msg);
}

}  // namespace gridfrt
