#include "gridfrt/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "gridfrt/dynamics.hpp"

namespace gridfrt::synthesis {

void SynthesisConfig::validate() const {
  if (!(sigma > 0.0)) throw GridError("sigma must be positive");
  if (!(p0 >= 0.0)) throw GridError("p0 must be non-negative");
  const double sum = nf_mix[0] + nf_mix[1] + nf_mix[2];
  if (std::abs(sum - 1.0) > 1e-9 || *std::min_element(nf_mix.begin(), nf_mix.end()) < 0.0) {
    throw GridError("nf_mix weights must be non-negative and sum to 1");
  }
  if (!(grid_forming_share > 0.0 && grid_forming_share < 1.0)) throw GridError("grid_forming_share must lie in (0, 1)");
  if (!(loading_margin > 0.0 && loading_margin <= 1.0)) throw GridError("loading_margin must lie in (0, 1]");
  if (!(v_target > 0.0) || !(v_tol >= 0.0)) throw GridError("invalid voltage target/tolerance");
  if (!(thermal_current_ka > 0.0)) throw GridError("thermal current must be positive");
  if (max_retries < 1) throw GridError("max_retries must be at least 1");
  if (n_min < 2 || n_max < n_min) throw GridError("bus count range must satisfy 2 <= n_min <= n_max");
  line_type.validate();
  base.validate();
}

double SynthesisConfig::line_rating_pu() const {
  return std::sqrt(3.0) * base.v_base_kv * thermal_current_ka / base.s_base_mw;
}

double sample_net_power(const SynthesisConfig& cfg, std::mt19937_64& rng) {
  std::bernoulli_distribution positive(cfg.grid_forming_share);
  std::normal_distribution<double> noise(0.0, cfg.sigma);
  const double mode = positive(rng) ? cfg.p0 : -cfg.p0;
  return mode + noise(rng);
}

double net_power_cdf(const SynthesisConfig& cfg, double x) {
  auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  const double w = cfg.grid_forming_share;
  return w * phi((x - cfg.p0) / cfg.sigma) + (1.0 - w) * phi((x + cfg.p0) / cfg.sigma);
}

Grid assign_bus_kinds(const topogen::Skeleton& skeleton, std::vector<Line> lines, std::vector<double> net_power,
                      const SynthesisConfig& cfg, std::mt19937_64& rng) {
  const int n = skeleton.size();
  if (static_cast<int>(net_power.size()) != n) throw std::invalid_argument("one net power per bus required");
  double generation = 0.0;
  double consumption = 0.0;
  int slack = -1;
  for (int i = 0; i < n; ++i) {
    if (net_power[i] > 0.0) {
      generation += net_power[i];
      if (slack < 0 || net_power[i] > net_power[slack]) slack = i;
    } else {
      consumption -= net_power[i];
    }
  }
  if (slack < 0 || consumption <= 0.0) throw GridError("degenerate net power draw: all buses of one kind");
  const double scale = consumption / generation;

  std::discrete_distribution<int> label_draw(cfg.nf_mix.begin(), cfg.nf_mix.end());
  Grid g;
  g.base = cfg.base;
  g.lines = std::move(lines);
  g.buses.resize(n);
  for (int i = 0; i < n; ++i) {
    Bus& b = g.buses[i];
    b.id = i;
    b.position = std::make_pair(skeleton.nodes[i].x, skeleton.nodes[i].y);
    b.v_set = cfg.v_target;
    if (i == slack) {
      b.kind = BusKind::Slack;
      b.p_set = net_power[i] * scale;
    } else if (net_power[i] > 0.0) {
      b.kind = BusKind::NormalForm;
      b.p_set = net_power[i] * scale;
      static constexpr std::array labels{NormalFormLabel::NF1, NormalFormLabel::NF2, NormalFormLabel::NF3};
      b.params = NormalFormParams::preset(labels[label_draw(rng)]);
    } else {
      b.kind = BusKind::PQLoad;
      b.p_set = net_power[i];
      b.q_set = 0.0;
    }
  }
  return g;
}

Grid assign_bus_kinds(const topogen::Skeleton& skeleton, std::vector<Line> lines, const SynthesisConfig& cfg,
                      std::mt19937_64& rng) {
  constexpr int kMaxDraws = 100;
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    std::vector<double> p(skeleton.size());
    for (double& x : p) x = sample_net_power(cfg, rng);
    const bool any_pos = std::any_of(p.begin(), p.end(), [](double x) { return x > 0.0; });
    const bool any_neg = std::any_of(p.begin(), p.end(), [](double x) { return x <= 0.0; });
    if (any_pos && any_neg) return assign_bus_kinds(skeleton, std::move(lines), std::move(p), cfg, rng);
  }
  throw GridError("could not draw a net power vector with both generation and consumption");
}

SmallSignalResult small_signal_check(const Grid& grid, const OperatingPoint& op, double eps_eig) {
  const dynamics::GridDae dae(grid, op.voltage(grid.slack_index()));
  const Eigen::VectorXd y = dae.state_from_operating_point(op);
  Eigen::MatrixXd jac;
  dae.jacobian(y, jac);
  const Eigen::MatrixXd a = dynamics::reduced_state_matrix(jac, dae.differential_mask());
  SmallSignalResult res;
  if (a.rows() == 0) {
    res.stable = true;
    res.max_real = -std::numeric_limits<double>::infinity();
    return res;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) res.eigenvalues.push_back(es.eigenvalues()(i));

  // At most one numerically zero eigenvalue (rotational symmetry) is tolerated.
  const double zero_tol = 1e-9 * std::max(1.0, a.cwiseAbs().maxCoeff());
  int zero_idx = -1;
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
    const double mag = std::abs(res.eigenvalues[i]);
    if (mag < smallest) {
      smallest = mag;
      zero_idx = static_cast<int>(i);
    }
  }
  res.zero_mode_excluded = smallest < zero_tol;
  res.max_real = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
    if (res.zero_mode_excluded && static_cast<int>(i) == zero_idx) continue;
    res.max_real = std::max(res.max_real, res.eigenvalues[i].real());
  }
  res.stable = res.max_real < -eps_eig;
  return res;
}

LineLoading line_loading_check(const Grid& grid, const OperatingPoint& op, const SynthesisConfig& cfg) {
  LineLoading out;
  const double rating = cfg.line_rating_pu();
  for (std::size_t i = 0; i < grid.lines.size(); ++i) {
    const Line& l = grid.lines[i];
    const Complex vf = op.voltage(l.from);
    const Complex vt = op.voltage(l.to);
    const Complex sf = vf * std::conj((vf - vt) * l.y_series + vf * 0.5 * l.y_shunt);
    const Complex st = vt * std::conj((vt - vf) * l.y_series + vt * 0.5 * l.y_shunt);
    out.s_from.push_back(sf);
    out.s_to.push_back(st);
    const double loading = std::max(std::abs(sf), std::abs(st)) / rating;
    out.loading.push_back(loading);
    if (loading > cfg.loading_margin) out.overloaded.push_back(static_cast<int>(i));
  }
  return out;
}

Verdict validate_operating_grid(const Grid& grid, const SynthesisConfig& cfg) {
  Verdict v;
  try {
    v.load_flow = newton_load_flow(grid);
  } catch (const NumericalError& e) {
    v.stage = "load_flow";
    v.reason = e.what();
    return v;
  }
  const OperatingPoint& op = v.load_flow.op;
  double worst = 0.0;
  for (const auto& b : op.buses) worst = std::max(worst, std::abs(b.v - cfg.v_target));
  if (!(worst <= cfg.v_tol)) {
    v.stage = "voltage";
    v.reason = "max |V - v_target| = " + std::to_string(worst);
    return v;
  }
  const Grid dispatched = apply_dispatch(grid, op);
  try {
    const auto ss = small_signal_check(dispatched, op, cfg.eps_eig);
    if (!ss.stable) {
      v.stage = "small_signal";
      v.reason = "max Re(lambda) = " + std::to_string(ss.max_real);
      return v;
    }
  } catch (const NumericalError& e) {
    v.stage = "small_signal";
    v.reason = e.what();
    return v;
  }
  const auto loading = line_loading_check(dispatched, op, cfg);
  if (!loading.ok()) {
    v.stage = "loading";
    v.reason = std::to_string(loading.overloaded.size()) + " overloaded lines";
    return v;
  }
  return v;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

SynthesizedGrid synthesize_grid(const SynthesisConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<Rejection> trace;
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const std::uint64_t sub = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    std::mt19937_64 rng(sub);
    topogen::GrowthConfig growth = cfg.growth;
    growth.n_buses = std::uniform_int_distribution<int>(cfg.n_min, cfg.n_max)(rng);
    growth.n0 = std::min(growth.n0, growth.n_buses);
    growth.rng_seed = rng();
    const auto skeleton = topogen::grow_topology(growth);
    auto lines = topogen::assign_line_params(skeleton, cfg.line_type, cfg.base);

    Grid grid;
    try {
      grid = assign_bus_kinds(skeleton, std::move(lines), cfg, rng);
    } catch (const GridError& e) {
      trace.push_back({attempt, sub, "kinds", e.what()});
      continue;
    }
    Verdict verdict = validate_operating_grid(grid, cfg);
    if (!verdict.accepted()) {
      trace.push_back({attempt, sub, verdict.stage, verdict.reason});
      continue;
    }
    SynthesizedGrid out;
    out.op = verdict.load_flow.op;
    out.grid = apply_dispatch(std::move(grid), out.op);
    out.trace = std::move(trace);
    out.accepted_seed = sub;
    return out;
  }
  throw SynthesisError("retry budget exhausted after " + std::to_string(cfg.max_retries) + " attempts",
                       std::move(trace));
}

}  // namespace gridfrt::synthesis
