#pragma once

#include "gridfrt/core_model.hpp"
#include "gridfrt/synthesis.hpp"

namespace gridfrt::test {

/// Triangle: slack 0, PQ load 1 (-2 - 0.5j), NF3 bus 2 (p = 1.2, v = 1).
/// Lines 0-1 100 km, 1-2 80 km, 0-2 120 km.
inline Grid three_bus_grid(NormalFormLabel label = NormalFormLabel::NF3) {
  Grid g;
  Bus slack;
  slack.id = 0;
  slack.kind = BusKind::Slack;
  Bus load;
  load.id = 1;
  load.kind = BusKind::PQLoad;
  load.p_set = -2.0;
  load.q_set = -0.5;
  Bus nf;
  nf.id = 2;
  nf.kind = BusKind::NormalForm;
  nf.p_set = 1.2;
  nf.params = NormalFormParams::preset(label);
  g.buses = {slack, load, nf};
  auto line = [&](int f, int t, double km) {
    LineParams p = kOverhead380kV;
    p.length_km = km;
    return make_line(f, t, p, g.base);
  };
  g.lines = {line(0, 1, 100.0), line(1, 2, 80.0), line(0, 2, 120.0)};
  return g;
}

/// Grid with the load-flow dispatch applied, plus its operating point.
inline std::pair<Grid, OperatingPoint> dispatched(Grid g) {
  const auto lf = synthesis::newton_load_flow(g);
  return {synthesis::apply_dispatch(std::move(g), lf.op), lf.op};
}

}  // namespace gridfrt::test
