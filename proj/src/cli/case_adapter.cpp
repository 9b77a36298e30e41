#include "gridfrt/cli/case_adapter.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace gridfrt::cli {

namespace {

CaseBusType bus_type_from_string(const std::string& s) {
  if (s == "GEN") return CaseBusType::Gen;
  if (s == "LOAD") return CaseBusType::Load;
  if (s == "SYNC") return CaseBusType::Sync;
  if (s == "SLACK") return CaseBusType::Slack;
  throw GridError("unknown bus type '" + s + "'");
}

}  // namespace

TestCase parse_case(std::istream& is, const std::string& source) {
  TestCase tc;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    auto fail = [&](const std::string& why) {
      return GridError(source + ":" + std::to_string(line_no) + ": " + why);
    };
    if (tag == "BUS") {
      CaseBus b;
      std::string type;
      if (!(ls >> b.id >> type >> b.pd_mw >> b.qd_mvar >> b.pg_mw)) throw fail("expected BUS id type Pd Qd Pg");
      try {
        b.type = bus_type_from_string(type);
      } catch (const GridError& e) {
        throw fail(e.what());
      }
      tc.buses.push_back(b);
    } else if (tag == "BRANCH") {
      CaseBranch br;
      std::string kind;
      if (!(ls >> br.from >> br.to >> br.length_mi >> kind)) throw fail("expected BRANCH from to length kind");
      if (kind != "line" && kind != "xfmr") throw fail("branch kind must be line or xfmr");
      br.transformer = kind == "xfmr";
      if (!br.transformer && !(br.length_mi > 0.0)) throw fail("line length must be positive");
      tc.branches.push_back(br);
    } else {
      throw fail("unknown record '" + tag + "'");
    }
    std::string extra;
    if (ls >> extra) throw GridError(source + ":" + std::to_string(line_no) + ": trailing field '" + extra + "'");
  }
  if (tc.buses.empty()) throw GridError(source + ": no buses");
  return tc;
}

TestCase read_case(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw GridError("cannot read case file " + path.string());
  return parse_case(is, path.string());
}

AdaptedCase adapt_case(const TestCase& tc, const synthesis::SynthesisConfig& cfg, double transformer_length_km,
                       std::uint64_t seed) {
  std::vector<CaseBus> buses = tc.buses;
  std::sort(buses.begin(), buses.end(), [](const CaseBus& a, const CaseBus& b) { return a.id < b.id; });
  std::map<int, int> index;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!index.emplace(buses[i].id, static_cast<int>(i)).second) {
      throw GridError("duplicate bus id " + std::to_string(buses[i].id));
    }
  }
  const double s_base = cfg.base.s_base_mw;
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> label_draw(cfg.nf_mix.begin(), cfg.nf_mix.end());
  static constexpr std::array labels{NormalFormLabel::NF1, NormalFormLabel::NF2, NormalFormLabel::NF3};

  AdaptedCase out;
  out.grid.base = cfg.base;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const CaseBus& cb = buses[i];
    Bus b;
    b.id = static_cast<int>(i);
    b.v_set = cfg.v_target;
    switch (cb.type) {
      case CaseBusType::Slack:
        b.kind = BusKind::Slack;
        b.p_set = (cb.pg_mw - cb.pd_mw) / s_base;
        break;
      case CaseBusType::Gen:
        b.kind = BusKind::NormalForm;
        b.p_set = (cb.pg_mw - cb.pd_mw) / s_base;
        b.params = NormalFormParams::preset(labels[label_draw(rng)]);
        break;
      case CaseBusType::Load:
      case CaseBusType::Sync:
        b.kind = BusKind::PQLoad;
        b.p_set = (cb.pg_mw - cb.pd_mw) / s_base;
        b.q_set = -cb.qd_mvar / s_base;
        break;
    }
    out.grid.buses.push_back(std::move(b));
    out.original_ids.push_back(cb.id);
  }
  for (const auto& br : tc.branches) {
    const auto f = index.find(br.from);
    const auto t = index.find(br.to);
    if (f == index.end() || t == index.end()) {
      throw GridError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) + " references an unknown bus");
    }
    LineParams p = cfg.line_type;
    p.length_km = br.transformer ? transformer_length_km : br.length_mi * kKmPerMile;
    out.grid.lines.push_back(make_line(f->second, t->second, p, cfg.base));
  }
  require_valid(out.grid);
  const auto lf = synthesis::newton_load_flow(out.grid);
  out.op = lf.op;
  out.grid = synthesis::apply_dispatch(std::move(out.grid), out.op);
  return out;
}

}  // namespace gridfrt::cli
