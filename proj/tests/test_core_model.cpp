#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gridfrt/core_model.hpp"
#include "gridfrt/grid_io.hpp"
#include "helpers.hpp"

using namespace gridfrt;

TEST_CASE("line admittance of a 100 km overhead line") {
  LineParams p = kOverhead380kV;
  p.length_km = 100.0;
  const auto y = line_admittance(p, PerUnitBase{});
  // reference values from a separate complex-arithmetic evaluation
  CHECK(y.y_series.real() == doctest::Approx(5.718811881188119).epsilon(1e-12));
  CHECK(y.y_series.imag() == doctest::Approx(-57.18811881188119).epsilon(1e-12));
  CHECK(y.y_shunt.real() == 0.0);
  CHECK(y.y_shunt.imag() == doctest::Approx(0.6214949914743616).epsilon(1e-12));
}

TEST_CASE("admittance scales inversely with length") {
  LineParams a = kOverhead380kV, b = kOverhead380kV;
  a.length_km = 30.0;
  b.length_km = 60.0;
  const auto ya = line_admittance(a, {}), yb = line_admittance(b, {});
  CHECK(std::abs(ya.y_series - 2.0 * yb.y_series) < 1e-9);
  CHECK(std::abs(2.0 * ya.y_shunt - yb.y_shunt) < 1e-12);
}

TEST_CASE("invalid line and base parameters are rejected") {
  LineParams p = kOverhead380kV;
  p.length_km = 0.0;
  CHECK_THROWS_AS(line_admittance(p, {}), GridError);
  p.length_km = 10.0;
  p.r_per_km = -1.0;
  CHECK_THROWS_AS(p.validate(), GridError);
  PerUnitBase b;
  b.s_base_mw = 0.0;
  CHECK_THROWS_AS(b.validate(), GridError);
}

TEST_CASE("admittance matrix: rows sum to the shunt terms") {
  const Grid g = test::three_bus_grid();
  const auto y = admittance_matrix(g);
  REQUIRE(y.rows() == 3);
  CHECK((y - y.transpose()).norm() < 1e-12);
  Eigen::VectorXcd shunt = Eigen::VectorXcd::Zero(3);
  for (const auto& l : g.lines) {
    shunt(l.from) += l.y_shunt / 2.0;
    shunt(l.to) += l.y_shunt / 2.0;
  }
  CHECK((y.rowwise().sum() - shunt).norm() < 1e-10);
}

TEST_CASE("grid validation") {
  Grid g = test::three_bus_grid();
  CHECK(validate_grid(g).empty());
  CHECK(g.slack_index() == 0);

  SUBCASE("no slack") {
    g.buses[0].kind = BusKind::PQLoad;
    CHECK_THROWS_AS(require_valid(g), GridError);
  }
  SUBCASE("two slacks") {
    g.buses[1].kind = BusKind::Slack;
    CHECK_FALSE(validate_grid(g).empty());
  }
  SUBCASE("disconnected") {
    g.lines.pop_back();
    g.lines.erase(g.lines.begin());
    CHECK_FALSE(validate_grid(g).empty());
  }
  SUBCASE("NormalForm without parameters") {
    g.buses[2].params.reset();
    CHECK_FALSE(validate_grid(g).empty());
  }
  SUBCASE("line to an unknown bus") {
    g.lines[0].to = 7;
    CHECK_FALSE(validate_grid(g).empty());
  }
}

TEST_CASE("connectivity helper") {
  CHECK(is_connected(1, {}));
  CHECK(is_connected(3, {{0, 1}, {1, 2}}));
  CHECK_FALSE(is_connected(3, {{0, 1}}));
}

TEST_CASE("normal-form presets") {
  const auto nf1 = NormalFormParams::preset(NormalFormLabel::NF1);
  const auto nf2 = NormalFormParams::preset(NormalFormLabel::NF2);
  const auto nf3 = NormalFormParams::preset(NormalFormLabel::NF3);
  CHECK(nf1.b_omega == -1.0);
  CHECK(nf1.g_omega == -5.0);
  CHECK(nf2.b_omega == -2.0);
  CHECK(nf2.g_omega == -10.0);
  CHECK(nf3.b_omega == -0.2);
  CHECK(nf3.g_omega == -1.0);
  CHECK(nf3.re_bx() == -0.2);
  CHECK(nf1.b_v == Complex(0.0, 1.0));
  CHECK(normal_form_label_from_string(to_string(NormalFormLabel::NF2)) == NormalFormLabel::NF2);
  CHECK_THROWS_AS(normal_form_label_from_string("NF9"), GridError);
}

TEST_CASE("grid JSON round trip") {
  const Grid g = test::three_bus_grid(NormalFormLabel::NF1);
  const Grid back = grid_from_json(grid_to_json(g));
  REQUIRE(back.size() == g.size());
  REQUIRE(back.lines.size() == g.lines.size());
  for (int i = 0; i < g.size(); ++i) {
    CHECK(back.buses[i].kind == g.buses[i].kind);
    CHECK(back.buses[i].p_set == g.buses[i].p_set);
    CHECK(back.buses[i].q_set == g.buses[i].q_set);
  }
  CHECK(back.buses[2].params->label == NormalFormLabel::NF1);
  CHECK(back.buses[2].params->g_omega == -5.0);
  CHECK(std::abs(back.lines[1].y_series - g.lines[1].y_series) < 1e-12);
  CHECK(grid_to_json(back) == grid_to_json(g));
}

TEST_CASE("malformed grid JSON") {
  auto j = grid_to_json(test::three_bus_grid());
  j["buses"][1]["kind"] = "Generator";
  CHECK_THROWS_AS(grid_from_json(j), GridError);
}
