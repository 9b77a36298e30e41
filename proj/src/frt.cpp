#include "gridfrt/frt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "gridfrt/format.hpp"
#include "gridfrt/grid_io.hpp"
#include "gridfrt/parallel.hpp"

namespace gridfrt::frt {

double Envelope::at(double t) const {
  if (points.empty()) throw GridError("empty envelope");
  auto it = std::upper_bound(points.begin(), points.end(), t,
                             [](double x, const std::pair<double, double>& p) { return x < p.first; });
  if (it == points.begin()) return points.front().second;
  if (it == points.end()) return points.back().second;
  const auto& [t0, v0] = *(it - 1);
  const auto& [t1, v1] = *it;
  return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

RideThroughCurve RideThroughCurve::standard() {
  RideThroughCurve c;
  c.low_v.points = {{0.0, 0.15}, {0.15, 0.15}, {3.0, 0.85}};
  c.high_v.points = {{0.0, 1.3}, {0.1, 1.3}, {0.1, 1.2}};
  c.freq_band_hz = 2.0;
  return c;
}

RideThroughCurve RideThroughCurve::unbounded() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  RideThroughCurve c;
  c.low_v.points = {{0.0, -inf}};
  c.high_v.points = {{0.0, inf}};
  c.freq_band_hz = inf;
  return c;
}

RideThroughCurve RideThroughCurve::empty_band() {
  RideThroughCurve c;
  c.low_v.points = {{0.0, 1.0}};
  c.high_v.points = {{0.0, 1.0}};
  c.freq_band_hz = 2.0;
  return c;
}

void RideThroughCurve::validate() const {
  for (const Envelope* e : {&low_v, &high_v}) {
    if (e->points.empty()) throw GridError("ride-through envelope has no points");
    for (std::size_t i = 1; i < e->points.size(); ++i) {
      if (e->points[i].first < e->points[i - 1].first) throw GridError("envelope times must be non-decreasing");
    }
  }
  if (!(freq_band_hz > 0.0)) throw GridError("frequency band must be positive");
  // Both envelopes are linear between the union of breakpoints.
  std::vector<double> ts{0.0};
  for (const auto& p : low_v.points) ts.push_back(p.first);
  for (const auto& p : high_v.points) ts.push_back(p.first);
  for (double t : ts) {
    for (double probe : {t, t + 1e-12}) {
      if (low_v.at(probe) > high_v.at(probe)) throw GridError("low-voltage envelope exceeds high-voltage envelope");
    }
  }
}

namespace {

nlohmann::json envelope_to_json(const Envelope& e) {
  auto arr = nlohmann::json::array();
  for (const auto& [t, v] : e.points) arr.push_back({t, v});
  return arr;
}

Envelope envelope_from_json(const nlohmann::json& j) {
  Envelope e;
  for (const auto& p : j) e.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return e;
}

}  // namespace

void to_json(nlohmann::json& j, const RideThroughCurve& c) {
  j = {{"low_v", envelope_to_json(c.low_v)}, {"high_v", envelope_to_json(c.high_v)}, {"freq_band", c.freq_band_hz}};
}

void from_json(const nlohmann::json& j, RideThroughCurve& c) {
  try {
    c.low_v = envelope_from_json(j.at("low_v"));
    c.high_v = envelope_from_json(j.at("high_v"));
    c.freq_band_hz = j.at("freq_band").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw GridError(std::string("malformed ride-through curve: ") + e.what());
  }
  c.validate();
}

RideThroughCurve read_curve(const std::filesystem::path& path) { return read_json_file(path).get<RideThroughCurve>(); }

RideThroughMonitor::RideThroughMonitor(const dynamics::GridDae& dae, const RideThroughCurve& curve,
                                       MonitorOptions opts, std::vector<double> v_reference)
    : dae_(dae), curve_(curve), opts_(opts), v_ref_(std::move(v_reference)) {
  if (!(opts_.check_dt > 0.0)) throw std::invalid_argument("check_dt must be positive");
  if (opts_.settle_stop && static_cast<int>(v_ref_.size()) != dae.grid().size()) {
    throw std::invalid_argument("settle detection needs one reference voltage per bus");
  }
}

bool RideThroughMonitor::check(double t, const Eigen::VectorXd& y) {
  last_checked_ = t;
  const double lo = curve_.low_v.at(t);
  const double hi = curve_.high_v.at(t);
  const double band = 2.0 * std::numbers::pi * curve_.freq_band_hz;
  bool settled = opts_.settle_stop && t >= curve_.horizon();
  const Grid& g = dae_.grid();
  for (int b = 0; b < g.size(); ++b) {
    const double v = std::abs(dae_.voltage(y, b));
    if (!(v >= lo)) {
      violation_ = Violation{t, b, "low_v", v};
    } else if (!(v <= hi)) {
      violation_ = Violation{t, b, "high_v", v};
    }
    double w = 0.0;
    if (g.buses[b].kind == BusKind::NormalForm) {
      w = std::abs(dae_.omega(y, b));
      if (!violation_ && !(w <= band)) violation_ = Violation{t, b, "freq", w / (2.0 * std::numbers::pi)};
    }
    if (violation_) {
      status_ = Status::Violated;
      return false;
    }
    if (settled && (std::abs(v - v_ref_[b]) > opts_.settle_v_tol || w > opts_.settle_omega_tol)) settled = false;
  }
  if (settled) {
    status_ = Status::Settled;
    return false;
  }
  return true;
}

bool RideThroughMonitor::start(const Eigen::VectorXd& y0) {
  next_k_ = 1;
  return check(0.0, y0);
}

bool RideThroughMonitor::observe(const dynamics::StepPolynomial& step) {
  if (status_ != Status::Running) return false;
  const double t1 = step.t1();
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  for (;; ++next_k_) {
    const double t = static_cast<double>(next_k_) * opts_.check_dt;
    if (t > t1 + slack) break;
    step.eval(std::min(t, t1), buf_);
    if (!check(t, buf_)) {
      ++next_k_;
      return false;
    }
  }
  return true;
}

bool classify(const dynamics::Trajectory& traj, const RideThroughCurve& curve, const dynamics::GridDae& dae,
              double check_dt) {
  if (traj.t_end() < curve.horizon() - 1e-9) {
    throw GridError("trajectory ends at t = " + std::to_string(traj.t_end()) + " before the curve horizon " +
                    std::to_string(curve.horizon()));
  }
  RideThroughMonitor monitor(dae, curve, MonitorOptions{check_dt, false, 0.0, 0.0});
  if (!monitor.start(traj.initial_state())) return false;
  for (const auto& step : traj.steps()) {
    if (!monitor.observe(step)) break;
  }
  return monitor.status() != RideThroughMonitor::Status::Violated;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Survived: return "survived";
    case Outcome::Violated: return "violated";
    case Outcome::InitFailed: return "init_failed";
    case Outcome::IntegrationFailed: return "integration_failed";
  }
  return "?";
}

FrtResult FrtResult::from_counts(int bus_id, long v_star, long v_total, long n_init_failed, long n_integ_failed) {
  if (v_total <= 0 || v_star < 0 || v_star > v_total) throw std::invalid_argument("inconsistent ride-through counts");
  FrtResult r;
  r.bus_id = bus_id;
  r.v_star = v_star;
  r.v_total = v_total;
  r.p_frt = static_cast<double>(v_star) / static_cast<double>(v_total);
  r.std_err = std::sqrt(r.p_frt * (1.0 - r.p_frt) / static_cast<double>(v_total));
  r.n_init_failed = n_init_failed;
  r.n_integ_failed = n_integ_failed;
  return r;
}

SampleOutcome run_sample(const dynamics::GridDae& dae, const OperatingPoint& op, const RideThroughCurve& curve,
                         int bus, std::uint64_t sample_idx, const AssessOptions& opts) {
  SampleOutcome out;
  out.sample_idx = sample_idx;
  out.spec = perturb::perturbation_at(dae.grid(), bus, sample_idx);
  perturb::PostClearanceState state;
  try {
    state = perturb::consistent_init(dae, op, out.spec, opts.projection);
  } catch (const perturb::NoConsistentState&) {
    out.outcome = Outcome::InitFailed;
    return out;
  }
  out.delta_p = state.delta_p;
  out.delta_q = state.delta_q;

  std::vector<double> v_ref;
  for (const auto& b : op.buses) v_ref.push_back(b.v);
  RideThroughMonitor monitor(dae, curve, opts.monitor, std::move(v_ref));
  if (!monitor.start(state.y)) {
    out.outcome = Outcome::Violated;
    return out;
  }
  if (opts.t_end < curve.horizon()) throw GridError("t_end is shorter than the ride-through curve horizon");
  try {
    dynamics::IntegrateOptions io;
    io.rtol = opts.rtol;
    io.atol = opts.atol;
    io.store_steps = false;
    dynamics::integrate(dae, state.y, opts.t_end, io,
                        [&](const dynamics::StepPolynomial& step) { return monitor.observe(step); });
  } catch (const dynamics::IntegrationFailure&) {
    out.outcome = Outcome::IntegrationFailed;
    out.t_stop = monitor.last_checked();
    return out;
  } catch (const NumericalError&) {
    out.outcome = Outcome::IntegrationFailed;
    out.t_stop = monitor.last_checked();
    return out;
  }
  out.t_stop = monitor.last_checked();
  out.outcome = monitor.status() == RideThroughMonitor::Status::Violated ? Outcome::Violated : Outcome::Survived;
  return out;
}

BusAssessment aggregate(int bus_id, std::vector<SampleOutcome> samples) {
  long survived = 0;
  long init_failed = 0;
  long integ_failed = 0;
  for (const auto& s : samples) {
    survived += s.outcome == Outcome::Survived;
    init_failed += s.outcome == Outcome::InitFailed;
    integ_failed += s.outcome == Outcome::IntegrationFailed;
  }
  BusAssessment a;
  a.result = FrtResult::from_counts(bus_id, survived, static_cast<long>(samples.size()), init_failed, integ_failed);
  a.samples = std::move(samples);
  return a;
}

BusAssessment assess_bus(const Grid& grid, const OperatingPoint& op, int bus, const RideThroughCurve& curve,
                         const AssessOptions& opts, int jobs) {
  curve.validate();
  const dynamics::GridDae dae(grid, op.voltage(grid.slack_index()));
  std::vector<SampleOutcome> samples(opts.n_samples);
  parallel_for(samples.size(), jobs, [&](std::size_t k) {
    samples[k] = run_sample(dae, op, curve, bus, opts.sample_offset + k, opts);
  });
  return aggregate(bus, std::move(samples));
}

std::vector<BusAssessment> assess_grid(const Grid& grid, const OperatingPoint& op, const RideThroughCurve& curve,
                                       const AssessOptions& opts, int jobs) {
  curve.validate();
  const dynamics::GridDae dae(grid, op.voltage(grid.slack_index()));
  std::vector<int> buses;
  for (const auto& b : grid.buses) {
    if (b.kind != BusKind::Slack) buses.push_back(b.id);
  }
  const std::size_t n = static_cast<std::size_t>(opts.n_samples);
  std::vector<SampleOutcome> flat(buses.size() * n);
  parallel_for(flat.size(), jobs, [&](std::size_t i) {
    flat[i] = run_sample(dae, op, curve, buses[i / n], opts.sample_offset + i % n, opts);
  });
  std::vector<BusAssessment> out;
  for (std::size_t b = 0; b < buses.size(); ++b) {
    std::vector<SampleOutcome> samples(flat.begin() + b * n, flat.begin() + (b + 1) * n);
    out.push_back(aggregate(buses[b], std::move(samples)));
  }
  return out;
}

void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  std::ostringstream os;
  os << "grid_id,bus_id,bus_kind,v_star,v_total,p_frt,std_err,n_init_failed,n_integ_failed,nf_label\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    os << row.grid_id << ',' << r.bus_id << ',' << to_string(row.kind) << ',' << r.v_star << ',' << r.v_total << ','
       << fmt_num(r.p_frt) << ',' << fmt_num(r.std_err) << ',' << r.n_init_failed << ',' << r.n_integ_failed << ','
       << (row.label ? std::string(to_string(*row.label)) : std::string()) << '\n';
  }
  write_text_file(path, os.str());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw GridError("cannot read results file " + path.string());
  std::string line;
  std::getline(is, line);
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw GridError(path.string() + ":" + std::to_string(line_no) + ": expected 10 columns");
    try {
      ResultRow row;
      row.grid_id = std::stoi(f[0]);
      row.kind = bus_kind_from_string(f[2]);
      if (!f[9].empty()) row.label = normal_form_label_from_string(f[9]);
      row.result = FrtResult::from_counts(std::stoi(f[1]), std::stol(f[3]), std::stol(f[4]), std::stol(f[7]),
                                          std::stol(f[8]));
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw GridError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

OrderingTest mann_whitney_greater(std::span<const double> a, std::span<const double> b) {
  OrderingTest t;
  t.n_a = a.size();
  t.n_b = b.size();
  if (a.empty() || b.empty()) throw std::invalid_argument("both samples must be non-empty");
  std::vector<std::pair<double, int>> all;
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end());
  const double n = static_cast<double>(all.size());
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second == 0) rank_sum_a += avg_rank;
    }
    const double tie = static_cast<double>(j - i);
    tie_term += tie * tie * tie - tie;
    i = j;
  }
  const double na = static_cast<double>(t.n_a);
  const double nb = static_cast<double>(t.n_b);
  for (double x : a) t.mean_a += x / na;
  for (double x : b) t.mean_b += x / nb;
  t.u = rank_sum_a - na * (na + 1.0) / 2.0;
  const double mean_u = na * nb / 2.0;
  const double var_u = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var_u <= 0.0) {
    t.z = 0.0;
    t.p_value = 1.0;
    return t;
  }
  t.z = (t.u - mean_u) / std::sqrt(var_u);
  t.p_value = 0.5 * std::erfc(t.z / std::sqrt(2.0));
  return t;
}

}  // namespace gridfrt::frt
