#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridfrt/dynamics.hpp"
#include "gridfrt/synthesis.hpp"
#include "helpers.hpp"

using namespace gridfrt;
using namespace gridfrt::synthesis;

TEST_CASE("load flow on the three-bus grid matches an independent solve") {
  const Grid g = test::three_bus_grid();
  const auto lf = newton_load_flow(g);
  CHECK(lf.residual < 1e-10);
  const auto& op = lf.op;
  // reference from a generic nonlinear solver on the polar power equations
  CHECK(op.buses[1].theta == doctest::Approx(-0.014843696211481676).epsilon(1e-9));
  CHECK(op.buses[1].v == doctest::Approx(0.9987863919618667).epsilon(1e-10));
  CHECK(op.buses[2].theta == doctest::Approx(0.0010973621595824045).epsilon(1e-7));
  CHECK(op.buses[2].v == doctest::Approx(1.0));
  CHECK(op.buses[0].p == doctest::Approx(0.8030975129016191).epsilon(1e-9));
  CHECK(op.buses[0].q == doctest::Approx(-0.6874718157296797).epsilon(1e-9));
  CHECK(op.buses[2].q == doctest::Approx(-0.644681201134999).epsilon(1e-9));
  CHECK(op.buses[1].p == doctest::Approx(-2.0));
  CHECK(op.buses[1].q == doctest::Approx(-0.5));
}

TEST_CASE("load flow: power balance equals losses") {
  const Grid g = test::three_bus_grid();
  const auto op = newton_load_flow(g).op;
  const auto s = dynamics::network_power(admittance_matrix(g), op.voltages());
  double p_sum = 0.0;
  for (const auto& x : s) p_sum += x.real();
  double loss = 0.0;
  const auto v = op.voltages();
  for (const auto& l : g.lines) loss += std::norm(v[l.from] - v[l.to]) * l.y_series.real();
  CHECK(p_sum == doctest::Approx(loss).epsilon(1e-9));
}

TEST_CASE("apply_dispatch freezes reactive set points") {
  auto [g, op] = test::dispatched(test::three_bus_grid());
  CHECK(g.buses[2].q_set == doctest::Approx(op.buses[2].q));
  CHECK(g.buses[0].p_set == doctest::Approx(op.buses[0].p));
  CHECK(g.buses[1].q_set == -0.5);
}

TEST_CASE("load flow divergence is reported") {
  Grid g = test::three_bus_grid();
  g.buses[1].p_set = -400.0;
  CHECK_THROWS_AS(newton_load_flow(g), NumericalError);
}

TEST_CASE("net power draws follow the mixture distribution") {
  SynthesisConfig cfg;
  std::mt19937_64 rng(5);
  std::vector<double> x(20000);
  for (auto& v : x) v = sample_net_power(cfg, rng);
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = net_power_cdf(cfg, x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  // KS critical value at alpha = 0.01
  CHECK(d < 1.628 / std::sqrt(n));
  CHECK(net_power_cdf(cfg, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("bus kinds from net powers") {
  SynthesisConfig cfg;
  topogen::GrowthConfig gc;
  gc.n_buses = 6;
  const auto sk = topogen::grow_topology(gc);
  const auto lines = topogen::assign_line_params(sk, cfg.line_type, cfg.base);
  std::mt19937_64 rng(1);
  const Grid g = assign_bus_kinds(sk, lines, {0.5, -1.0, 2.0, -0.4, 0.9, -0.6}, cfg, rng);
  CHECK(g.buses[2].kind == BusKind::Slack);
  CHECK(g.buses[0].kind == BusKind::NormalForm);
  CHECK(g.buses[4].kind == BusKind::NormalForm);
  CHECK(g.buses[1].kind == BusKind::PQLoad);
  CHECK(g.buses[1].p_set == -1.0);
  double sum = 0.0;
  for (const auto& b : g.buses) sum += b.p_set;
  CHECK(std::abs(sum) < 1e-12);
  CHECK(validate_grid(g).empty());
  CHECK_THROWS_AS(assign_bus_kinds(sk, lines, {-1, -1, -1, -1, -1, -1}, cfg, rng), GridError);
}

TEST_CASE("small-signal check of a stable and an unstable grid") {
  auto [g, op] = test::dispatched(test::three_bus_grid());
  const auto ok = small_signal_check(g, op);
  CHECK(ok.stable);
  CHECK(ok.max_real < -1e-6);

  Grid bad = g;
  bad.buses[2].params->b_omega = 0.5;  // negative damping
  const auto res = small_signal_check(bad, op);
  CHECK_FALSE(res.stable);
  CHECK(res.max_real > 0.0);
}

TEST_CASE("line loading") {
  auto [g, op] = test::dispatched(test::three_bus_grid());
  SynthesisConfig cfg;
  const auto ld = line_loading_check(g, op, cfg);
  REQUIRE(ld.loading.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double rating = cfg.line_rating_pu();
    CHECK(ld.loading[i] == doctest::Approx(std::max(std::abs(ld.s_from[i]), std::abs(ld.s_to[i])) / rating));
  }
  CHECK(ld.overloaded.empty());
  cfg.thermal_current_ka = 0.05;
  CHECK_FALSE(line_loading_check(g, op, cfg).overloaded.empty());
}

TEST_CASE("synthesized grids pass every validation stage") {
  SynthesisConfig cfg;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto s = synthesize_grid(cfg, derive_seed(99, seed));
    CHECK(s.grid.size() >= cfg.n_min);
    CHECK(s.grid.size() <= cfg.n_max);
    const auto v = validate_operating_grid(s.grid, cfg);
    CHECK(v.stage.empty());
    for (const auto& b : s.op.buses) CHECK(std::abs(b.v - cfg.v_target) <= cfg.v_tol);
  }
}

TEST_CASE("synthesis is deterministic in the seed") {
  SynthesisConfig cfg;
  const auto a = synthesize_grid(cfg, 17), b = synthesize_grid(cfg, 17);
  REQUIRE(a.grid.size() == b.grid.size());
  for (int i = 0; i < a.grid.size(); ++i) {
    CHECK(a.grid.buses[i].p_set == b.grid.buses[i].p_set);
    CHECK(a.op.buses[i].theta == b.op.buses[i].theta);
  }
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}

TEST_CASE("retry exhaustion carries the rejection trace") {
  SynthesisConfig cfg;
  cfg.v_tol = 0.0;
  cfg.max_retries = 2;
  try {
    synthesize_grid(cfg, 3);
    FAIL("expected SynthesisError");
  } catch (const SynthesisError& e) {
    CHECK(e.trace().size() == 2);
    CHECK(e.trace()[0].stage == "voltage");
  }
}

TEST_CASE("config validation") {
  SynthesisConfig cfg;
  cfg.nf_mix = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), GridError);
  cfg = {};
  cfg.n_min = 40;
  CHECK_THROWS_AS(cfg.validate(), GridError);
}
