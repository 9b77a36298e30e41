#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gridfrt/frt.hpp"
#include "helpers.hpp"

using namespace gridfrt;
using namespace gridfrt::frt;

TEST_CASE("envelope interpolation and jumps") {
  const auto c = RideThroughCurve::standard();
  CHECK(c.low_v.at(0.0) == 0.15);
  CHECK(c.low_v.at(0.15) == doctest::Approx(0.15));
  CHECK(c.low_v.at(1.575) == doctest::Approx(0.5));
  CHECK(c.low_v.at(3.0) == doctest::Approx(0.85));
  CHECK(c.low_v.at(20.0) == doctest::Approx(0.85));
  CHECK(c.high_v.at(0.05) == 1.3);
  CHECK(c.high_v.at(0.2) == 1.2);
  CHECK(c.freq_band_hz == 2.0);
  CHECK(c.horizon() == 3.0);
}

TEST_CASE("curve validation and JSON") {
  auto c = RideThroughCurve::standard();
  const nlohmann::json j = c;
  const auto back = j.get<RideThroughCurve>();
  CHECK(back.low_v.points == c.low_v.points);
  CHECK(back.high_v.points == c.high_v.points);
  c.low_v.points = {{0.0, 0.5}, {0.1, 1.4}};
  CHECK_THROWS_AS(c.validate(), GridError);
  c = RideThroughCurve::standard();
  c.low_v.points = {{1.0, 0.5}, {0.5, 0.6}};
  CHECK_THROWS_AS(c.validate(), GridError);
}

TEST_CASE("standard error of the estimate") {
  const auto r = FrtResult::from_counts(3, 500, 1000);
  CHECK(r.p_frt == 0.5);
  CHECK(r.std_err == std::sqrt(0.25 / 1000.0));
  CHECK(r.std_err <= 0.02);
  CHECK(FrtResult::from_counts(0, 0, 10).std_err == 0.0);
  CHECK(FrtResult::from_counts(0, 10, 10).p_frt == 1.0);
  CHECK_THROWS_AS(FrtResult::from_counts(0, 11, 10), std::invalid_argument);
  CHECK_THROWS_AS(FrtResult::from_counts(0, 0, 0), std::invalid_argument);
}

TEST_CASE("classification of trajectories") {
  auto [g, op] = test::dispatched(test::three_bus_grid());
  const dynamics::GridDae dae(g);
  const auto y0 = dae.state_from_operating_point(op);
  const auto traj = dynamics::integrate(dae, y0, 4.0);
  CHECK(classify(traj, RideThroughCurve::standard(), dae));
  CHECK(classify(traj, RideThroughCurve::unbounded(), dae));
  CHECK_FALSE(classify(traj, RideThroughCurve::empty_band(), dae));
  const auto short_traj = dynamics::integrate(dae, y0, 1.0);
  CHECK_THROWS_AS(classify(short_traj, RideThroughCurve::standard(), dae), GridError);
}

TEST_CASE("curve extremes bound the estimate") {
  auto [g, op] = test::dispatched(test::three_bus_grid());
  const dynamics::GridDae dae(g);
  AssessOptions o;
  o.n_samples = 8;
  o.t_end = 5.0;
  const auto open = assess_bus(g, op, 1, RideThroughCurve::unbounded(), o);
  const auto closed = assess_bus(g, op, 1, RideThroughCurve::empty_band(), o);
  const auto standard = assess_bus(g, op, 1, RideThroughCurve::standard(), o);
  const long failed = open.result.n_init_failed + open.result.n_integ_failed;
  CHECK(open.result.v_star == open.result.v_total - failed);
  CHECK(closed.result.v_star == 0);
  CHECK(standard.result.v_star <= open.result.v_star);
}

TEST_CASE("a looser curve never lowers the estimate") {
  const auto s = synthesis::synthesize_grid(synthesis::SynthesisConfig{}, 5);
  AssessOptions o;
  o.n_samples = 6;
  o.t_end = 5.0;
  auto loose = RideThroughCurve::standard();
  for (auto& p : loose.low_v.points) p.second *= 0.5;
  for (auto& p : loose.high_v.points) p.second += 0.2;
  loose.freq_band_hz = 4.0;
  for (int bus = 0; bus < std::min(5, s.grid.size()); ++bus) {
    if (s.grid.buses[bus].kind == BusKind::Slack) continue;
    const auto a = assess_bus(s.grid, s.op, bus, RideThroughCurve::standard(), o);
    const auto b = assess_bus(s.grid, s.op, bus, loose, o);
    CHECK(b.result.v_star >= a.result.v_star);
  }
}

TEST_CASE("assessment is reproducible and job-count independent") {
  const auto s = synthesis::synthesize_grid(synthesis::SynthesisConfig{}, 6);
  AssessOptions o;
  o.n_samples = 3;
  const auto a = assess_grid(s.grid, s.op, RideThroughCurve::standard(), o, 1);
  const auto b = assess_grid(s.grid, s.op, RideThroughCurve::standard(), o, 3);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == static_cast<std::size_t>(s.grid.size() - 1));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].result.v_star == b[i].result.v_star);
    CHECK(a[i].result.p_frt >= 0.0);
    CHECK(a[i].result.p_frt <= 1.0);
    for (std::size_t k = 0; k < a[i].samples.size(); ++k) CHECK(a[i].samples[k].outcome == b[i].samples[k].outcome);
  }
}

TEST_CASE("results CSV round trip") {
  std::vector<ResultRow> rows{{4, BusKind::NormalForm, NormalFormLabel::NF2, FrtResult::from_counts(3, 7, 10, 1, 0)},
                              {4, BusKind::PQLoad, std::nullopt, FrtResult::from_counts(5, 2, 10)}};
  const auto path = std::filesystem::temp_directory_path() / "gridfrt_results_test.csv";
  write_results_csv(path, rows);
  const auto back = read_results_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].label == NormalFormLabel::NF2);
  CHECK(back[0].result.v_star == 7);
  CHECK(back[0].result.n_init_failed == 1);
  CHECK_FALSE(back[1].label.has_value());
  CHECK(back[1].result.p_frt == doctest::Approx(0.2));
}

TEST_CASE("one-sided Mann-Whitney test") {
  const std::vector<double> a{0.1, 0.4, 0.4, 0.7, 0.9, 0.95};
  const std::vector<double> b{0.05, 0.1, 0.3, 0.4, 0.5};
  const auto t = mann_whitney_greater(a, b);
  // reference: asymptotic test with tie correction, no continuity correction
  CHECK(t.u == 23.5);
  CHECK(t.p_value == doctest::Approx(0.0582282649206976).epsilon(1e-10));
  const auto rev = mann_whitney_greater(b, a);
  CHECK(rev.p_value > 0.9);
  const std::vector<double> same{0.2, 0.2};
  CHECK(mann_whitney_greater(same, same).p_value == 1.0);
}
