#include "gridfrt/grid_io.hpp"

#include <fstream>
#include <sstream>

namespace gridfrt {

using nlohmann::json;

namespace {

json complex_to_json(Complex c) { return json::array({c.real(), c.imag()}); }

Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw GridError("expected a number or [re, im] pair");
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw GridError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw GridError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json normal_form_to_json(const NormalFormParams& p) {
  return json{{"label", std::string(to_string(p.label))},
              {"b_omega", p.b_omega},
              {"c_omega", p.c_omega},
              {"g_omega", p.g_omega},
              {"h_omega", p.h_omega},
              {"b_v", complex_to_json(p.b_v)},
              {"c_v", complex_to_json(p.c_v)},
              {"g_v", complex_to_json(p.g_v)},
              {"h_v", complex_to_json(p.h_v)}};
}

NormalFormParams normal_form_from_json(const json& j) {
  const auto label = normal_form_label_from_string(j.value("label", std::string("custom")));
  // A bare label selects the shipped preset; explicit fields override it.
  NormalFormParams p = label == NormalFormLabel::Custom ? NormalFormParams{} : NormalFormParams::preset(label);
  if (j.contains("b_omega")) p.b_omega = j["b_omega"].get<double>();
  if (j.contains("c_omega")) p.c_omega = j["c_omega"].get<double>();
  if (j.contains("g_omega")) p.g_omega = j["g_omega"].get<double>();
  if (j.contains("h_omega")) p.h_omega = j["h_omega"].get<double>();
  if (j.contains("b_v")) p.b_v = complex_from_json(j["b_v"]);
  if (j.contains("c_v")) p.c_v = complex_from_json(j["c_v"]);
  if (j.contains("g_v")) p.g_v = complex_from_json(j["g_v"]);
  if (j.contains("h_v")) p.h_v = complex_from_json(j["h_v"]);
  return p;
}

json grid_to_json(const Grid& grid) {
  json buses = json::array();
  for (const auto& b : grid.buses) {
    json jb{{"id", b.id}, {"kind", std::string(to_string(b.kind))}, {"p_set", b.p_set}, {"q_set", b.q_set}};
    if (b.kind != BusKind::PQLoad) jb["v_set"] = b.v_set;
    if (b.params) jb["params"] = normal_form_to_json(*b.params);
    if (b.position) {
      jb["x"] = b.position->first;
      jb["y"] = b.position->second;
    }
    buses.push_back(std::move(jb));
  }
  json lines = json::array();
  for (const auto& l : grid.lines) {
    lines.push_back(json{{"from", l.from},
                         {"to", l.to},
                         {"length", l.params.length_km},
                         {"r_per_km", l.params.r_per_km},
                         {"x_per_km", l.params.x_per_km},
                         {"c_sh_per_km", l.params.c_sh_per_km}});
  }
  return json{{"base",
               {{"v_base", grid.base.v_base_kv},
                {"s_base", grid.base.s_base_mw},
                {"f_nominal", grid.base.f_nominal_hz}}},
              {"buses", std::move(buses)},
              {"lines", std::move(lines)}};
}

Grid grid_from_json(const json& j) {
  if (!j.is_object()) throw GridError("grid JSON must be an object");
  Grid g;
  const json& jbase = j.at("base");
  g.base.v_base_kv = required<double>(jbase, "v_base");
  g.base.s_base_mw = required<double>(jbase, "s_base");
  g.base.f_nominal_hz = jbase.value("f_nominal", 50.0);
  g.base.validate();

  for (const auto& jb : j.at("buses")) {
    Bus b;
    b.id = required<int>(jb, "id");
    b.kind = bus_kind_from_string(required<std::string>(jb, "kind"));
    b.p_set = required<double>(jb, "p_set");
    b.q_set = required<double>(jb, "q_set");
    b.v_set = jb.value("v_set", 1.0);
    if (jb.contains("params")) b.params = normal_form_from_json(jb["params"]);
    if (jb.contains("x") && jb.contains("y")) b.position = std::make_pair(jb["x"].get<double>(), jb["y"].get<double>());
    g.buses.push_back(std::move(b));
  }
  for (const auto& jl : j.at("lines")) {
    LineParams lp;
    lp.length_km = required<double>(jl, "length");
    lp.r_per_km = required<double>(jl, "r_per_km");
    lp.x_per_km = required<double>(jl, "x_per_km");
    lp.c_sh_per_km = required<double>(jl, "c_sh_per_km");
    g.lines.push_back(make_line(required<int>(jl, "from"), required<int>(jl, "to"), lp, g.base));
  }
  require_valid(g);
  return g;
}

json operating_point_to_json(const OperatingPoint& op) {
  json j = json::object();
  for (std::size_t i = 0; i < op.buses.size(); ++i) {
    const auto& b = op.buses[i];
    j[std::to_string(i)] = json{{"v", b.v}, {"theta", b.theta}, {"p", b.p}, {"q", b.q}};
  }
  return j;
}

OperatingPoint operating_point_from_json(const json& j, int n_buses) {
  OperatingPoint op;
  op.buses.resize(n_buses);
  for (int i = 0; i < n_buses; ++i) {
    const auto key = std::to_string(i);
    if (!j.contains(key)) throw GridError("operating point missing bus " + key);
    const json& jb = j[key];
    op.buses[i] = {required<double>(jb, "v"), required<double>(jb, "theta"), required<double>(jb, "p"),
                   required<double>(jb, "q")};
  }
  return op;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GridError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw GridError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GridError("cannot write " + path.string());
  out << text;
}

void write_json_file(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(1) + "\n"); }

Grid read_grid(const std::filesystem::path& path) { return grid_from_json(read_json_file(path)); }

void write_grid(const std::filesystem::path& path, const Grid& grid) { write_json_file(path, grid_to_json(grid)); }

}  // namespace gridfrt
