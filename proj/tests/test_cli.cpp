#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "gridfrt/cli/case_adapter.hpp"
#include "gridfrt/cli/commands.hpp"
#include "gridfrt/cli/config.hpp"
#include "gridfrt/grid_io.hpp"

using namespace gridfrt;
using namespace gridfrt::cli;
namespace fs = std::filesystem;

TEST_CASE("case parser") {
  std::istringstream ok(
      "# comment\n"
      "BUS 1 SLACK 0 0 0\n"
      "BUS 2 GEN 10 0 120\n"
      "BUS 3 LOAD 90 20 0\n"
      "BRANCH 1 2 30 line\n"
      "BRANCH 2 3 0 xfmr  # tap\n"
      "BRANCH 1 3 12.5 line\n");
  const auto tc = parse_case(ok);
  CHECK(tc.buses.size() == 3);
  CHECK(tc.branches.size() == 3);
  CHECK(tc.branches[1].transformer);

  std::istringstream bad_type("BUS 1 PV 0 0 0\n");
  CHECK_THROWS_WITH_AS(parse_case(bad_type, "x.txt"), doctest::Contains("x.txt:1"), GridError);
  std::istringstream short_line("BUS 1 GEN 0\n");
  CHECK_THROWS_AS(parse_case(short_line), GridError);
  std::istringstream unknown("NODE 1\n");
  CHECK_THROWS_AS(parse_case(unknown), GridError);
}

TEST_CASE("adapting the bundled three-area case") {
  const auto tc = read_case(fs::path(GRIDFRT_DATA_DIR) / "rts96_three_area.txt");
  const auto ac = adapt_case(tc, synthesis::SynthesisConfig{}, 10.0, 1);
  CHECK(ac.grid.size() == 73);
  int non_slack = 0, gens = 0, nf = 0;
  for (const auto& b : tc.buses) gens += b.type == CaseBusType::Gen;
  for (const auto& b : ac.grid.buses) {
    non_slack += b.kind != BusKind::Slack;
    nf += b.kind == BusKind::NormalForm;
  }
  CHECK(non_slack == 72);
  CHECK(nf == gens);
  // every bus keeps its role and active set point
  for (std::size_t i = 0; i < tc.buses.size(); ++i) {
    const int id = ac.original_ids[i];
    const auto it = std::find_if(tc.buses.begin(), tc.buses.end(), [&](const CaseBus& b) { return b.id == id; });
    const Bus& b = ac.grid.buses[i];
    CHECK((it->type == CaseBusType::Gen) == (b.kind == BusKind::NormalForm));
    if (b.kind != BusKind::Slack) CHECK(b.p_set == doctest::Approx((it->pg_mw - it->pd_mw) / 100.0));
  }
  // tie line 107-203, 42 miles; reference admittance computed separately
  bool found = false;
  for (const auto& l : ac.grid.lines) {
    if (ac.original_ids[l.from] == 107 && ac.original_ids[l.to] == 203) {
      found = true;
      CHECK(l.y_series.real() == doctest::Approx(8.460726087606886).epsilon(1e-12));
      CHECK(l.y_series.imag() == doctest::Approx(-84.60726087606885).epsilon(1e-12));
    }
  }
  CHECK(found);
}

TEST_CASE("config round trip and strict keys") {
  RunConfig c;
  c.n_grids = 7;
  c.assess.n_samples = 12;
  c.train.tag.max_epochs = 33;
  const auto back = config_from_json(config_to_json(c));
  CHECK(back.n_grids == 7);
  CHECK(back.assess.n_samples == 12);
  CHECK(back.train.tag.max_epochs == 33);
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK_THROWS_AS(config_from_json({{"generate", {{"n_grid", 3}}}}), GridError);
  CHECK_THROWS_AS(config_from_json({{"assess", {{"n_samples", "many"}}}}), GridError);
}

TEST_CASE("generate refuses to overwrite without --force") {
  const fs::path out = fs::temp_directory_path() / "gridfrt_cli_force_test";
  fs::remove_all(out);
  CommonOptions o;
  o.seed = 3;
  o.out = out;
  cmd_generate(o, 1);
  CHECK(fs::exists(out / "grids" / "grid_0000.json"));
  CHECK_THROWS_AS(cmd_generate(o, 1), UsageError);
  o.force = true;
  cmd_generate(o, 1);
  CHECK(list_grids(out).size() == 1);
  fs::remove_all(out);
  CHECK_THROWS_AS(list_grids(out), GridError);
}
