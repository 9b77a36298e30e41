#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "gridfrt/dynamics.hpp"
#include "gridfrt/perturb.hpp"
#include "gridfrt/sobol.hpp"
#include "helpers.hpp"

using namespace gridfrt;
using namespace gridfrt::perturb;

TEST_CASE("sobol points match the reference construction") {
  // unscrambled Joe-Kuo sequence, indices 1..5 (index 0 is the origin)
  const std::vector<std::vector<double>> ref{{0.5, 0.5, 0.5},
                                             {0.75, 0.25, 0.25},
                                             {0.25, 0.75, 0.75},
                                             {0.375, 0.375, 0.625},
                                             {0.875, 0.875, 0.125}};
  SobolSampler s(3);
  for (const auto& r : ref) CHECK(s.next() == r);
  CHECK(s.point(0) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(SobolSampler(1).next()[0] == 0.5);
}

TEST_CASE("sobol random access agrees with sequential draws") {
  SobolSampler s(2);
  for (std::uint64_t i = 1; i < 300; ++i) CHECK(s.next() == s.point(i));
  s.seek(17);
  CHECK(s.next() == s.point(17));
}

TEST_CASE("sobol dimension limits") {
  CHECK_THROWS_AS(SobolSampler(0), std::invalid_argument);
  CHECK_THROWS_AS(SobolSampler(SobolSampler::kMaxDimension + 1), std::invalid_argument);
}

TEST_CASE("sobol first 2^k points stratify every dyadic interval") {
  SobolSampler s(3, 0);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 64; ++i) pts.push_back(s.next());
  for (int d = 0; d < 3; ++d) {
    std::vector<int> bins(64, 0);
    for (const auto& p : pts) bins[static_cast<int>(p[d] * 64)]++;
    CHECK(std::all_of(bins.begin(), bins.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("sobol has lower star discrepancy than pseudo-random points") {
  auto discrepancy = [](std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max({d, (i + 1) / n - x[i], x[i] - i / n});
    return d;
  };
  SobolSampler s(1);
  std::vector<double> q(1024);
  for (auto& v : q) v = s.next()[0];
  std::vector<double> random_d;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<double> r(1024);
    for (auto& v : r) v = u(rng);
    random_d.push_back(discrepancy(r));
  }
  std::sort(random_d.begin(), random_d.end());
  CHECK(discrepancy(q) < 0.5 * (random_d[9] + random_d[10]));
}

TEST_CASE("unit point mapping") {
  const double half2[] = {0.5, 0.5};
  const auto a = spec_from_unit_point(1, half2);
  CHECK(a.v_mag == 0.5);
  CHECK(a.v_angle == doctest::Approx(std::numbers::pi));
  CHECK(a.freq_offset == 0.0);
  const double half3[] = {0.5, 0.5, 0.5};
  CHECK(spec_from_unit_point(2, half3).freq_offset == 0.0);
  const double edge[] = {0.0, 0.0, 0.0};
  CHECK(spec_from_unit_point(2, edge).freq_offset == -1.0);
}

TEST_CASE("sample dimension follows the bus kind") {
  const Grid g = test::three_bus_grid();
  CHECK(sample_dimension(g, 1) == 2);
  CHECK(sample_dimension(g, 2) == 3);
  CHECK_THROWS_AS(sample_dimension(g, 0), GridError);
  CHECK_THROWS_AS(sample_dimension(g, 9), GridError);
  SobolSampler two(2);
  CHECK_THROWS_AS(make_perturbation(two, g, 2), std::invalid_argument);
  SobolSampler three(3);
  const auto p = make_perturbation(three, g, 2);
  CHECK(p.v_mag == 0.5);
  CHECK(p.freq_offset == 0.0);
  CHECK(perturbation_at(g, 2, 0).v_mag == 0.5);
  CHECK(perturbation_at(g, 2, 1).v_mag == 0.75);
}

TEST_CASE("consistent init: unchanged target returns the operating point") {
  auto [g, op] = test::dispatched(test::three_bus_grid());
  const dynamics::GridDae dae(g);
  const Eigen::VectorXd y0 = dae.state_from_operating_point(op);
  for (int bus : {1, 2}) {
    PerturbationSpec spec;
    spec.target_bus = bus;
    spec.v_mag = op.buses[bus].v;
    spec.v_angle = op.buses[bus].theta;
    const auto st = consistent_init(dae, op, spec);
    CHECK((st.y - y0).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(st.delta_p) < 1e-9);
  }
}

TEST_CASE("consistent init: pinned target, residual below 1e-8") {
  synthesis::SynthesisConfig cfg;
  const auto s = synthesis::synthesize_grid(cfg, 12);
  const dynamics::GridDae dae(s.grid);
  int solved = 0, tried = 0;
  for (int bus = 0; bus < s.grid.size(); ++bus) {
    if (s.grid.buses[bus].kind == BusKind::Slack) continue;
    for (std::uint64_t k = 0; k < 4; ++k) {
      const auto spec = perturbation_at(s.grid, bus, k);
      ++tried;
      try {
        const auto st = consistent_init(dae, s.op, spec);
        ++solved;
        CHECK(dae.algebraic_residual(st.y) < 1e-8);
        CHECK(std::abs(dae.voltage(st.y, bus) - spec.voltage()) < 1e-12);
        if (s.grid.buses[bus].kind == BusKind::NormalForm) {
          CHECK(dae.omega(st.y, bus) == doctest::Approx(2.0 * std::numbers::pi * spec.freq_offset));
          // NF target: every other differential state is untouched
          const Eigen::VectorXd y0 = dae.state_from_operating_point(s.op);
          for (int i : dae.differential_indices()) {
            if (i == dae.omega_offset(bus) || i == dae.voltage_offset(bus) || i == dae.voltage_offset(bus) + 1) continue;
            CHECK(st.y(i) == y0(i));
          }
        }
      } catch (const NoConsistentState&) {
      }
    }
  }
  CHECK(solved > tried / 2);
}

TEST_CASE("consistent init is deterministic") {
  auto [g, op] = test::dispatched(test::three_bus_grid());
  const dynamics::GridDae dae(g);
  const auto spec = perturbation_at(g, 1, 3);
  CHECK(consistent_init(dae, op, spec).y == consistent_init(dae, op, spec).y);
}
