#include "gridfrt/cli/config.hpp"

#include <set>

#include "gridfrt/grid_io.hpp"

namespace gridfrt::cli {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw GridError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw GridError("unknown config key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& c) {
  const auto& s = c.synthesis;
  nlohmann::json j;
  j["synthesis"] = {
      {"p0", s.p0},
      {"sigma", s.sigma},
      {"nf_mix", s.nf_mix},
      {"grid_forming_share", s.grid_forming_share},
      {"v_target", s.v_target},
      {"v_tol", s.v_tol},
      {"loading_margin", s.loading_margin},
      {"thermal_current_ka", s.thermal_current_ka},
      {"eps_eig", s.eps_eig},
      {"max_retries", s.max_retries},
      {"n_min", s.n_min},
      {"n_max", s.n_max},
      {"growth",
       {{"n0", s.growth.n0},
        {"p", s.growth.p},
        {"q", s.growth.q},
        {"r", s.growth.r},
        {"s", s.growth.s},
        {"mean_line_length_km", s.growth.mean_line_length_km}}},
      {"line_type",
       {{"r_per_km", s.line_type.r_per_km}, {"x_per_km", s.line_type.x_per_km}, {"c_sh_per_km", s.line_type.c_sh_per_km}}},
      {"base", {{"v_base", s.base.v_base_kv}, {"s_base", s.base.s_base_mw}, {"f_nominal", s.base.f_nominal_hz}}}};
  j["generate"] = {{"n_grids", c.n_grids}};
  const auto& a = c.assess;
  j["assess"] = {{"n_samples", a.n_samples},
                 {"t_end", a.t_end},
                 {"rtol", a.rtol},
                 {"atol", a.atol},
                 {"check_dt", a.monitor.check_dt},
                 {"settle_stop", a.monitor.settle_stop},
                 {"settle_v_tol", a.monitor.settle_v_tol},
                 {"settle_omega_tol", a.monitor.settle_omega_tol}};
  j["curve"] = c.curve;
  j["train"] = surrogate::train_config_to_json(c.train);
  j["train"]["val_fraction"] = c.val_fraction;
  j["train"]["test_fraction"] = c.test_fraction;
  j["train"]["seeds"] = c.train_seeds;
  j["case"] = {{"transformer_length_km", c.transformer_length_km}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    check_keys(j, {"synthesis", "generate", "assess", "curve", "train", "case"}, "");
    if (j.contains("synthesis")) {
      const auto& s = j.at("synthesis");
      check_keys(s,
                 {"p0", "sigma", "nf_mix", "grid_forming_share", "v_target", "v_tol", "loading_margin",
                  "thermal_current_ka", "eps_eig", "max_retries", "n_min", "n_max", "growth", "line_type", "base"},
                 "synthesis");
      auto& t = c.synthesis;
      read(s, "p0", t.p0);
      read(s, "sigma", t.sigma);
      read(s, "nf_mix", t.nf_mix);
      read(s, "grid_forming_share", t.grid_forming_share);
      read(s, "v_target", t.v_target);
      read(s, "v_tol", t.v_tol);
      read(s, "loading_margin", t.loading_margin);
      read(s, "thermal_current_ka", t.thermal_current_ka);
      read(s, "eps_eig", t.eps_eig);
      read(s, "max_retries", t.max_retries);
      read(s, "n_min", t.n_min);
      read(s, "n_max", t.n_max);
      if (s.contains("growth")) {
        const auto& g = s.at("growth");
        check_keys(g, {"n0", "p", "q", "r", "s", "mean_line_length_km"}, "synthesis.growth");
        read(g, "n0", t.growth.n0);
        read(g, "p", t.growth.p);
        read(g, "q", t.growth.q);
        read(g, "r", t.growth.r);
        read(g, "s", t.growth.s);
        read(g, "mean_line_length_km", t.growth.mean_line_length_km);
      }
      if (s.contains("line_type")) {
        const auto& l = s.at("line_type");
        check_keys(l, {"r_per_km", "x_per_km", "c_sh_per_km"}, "synthesis.line_type");
        read(l, "r_per_km", t.line_type.r_per_km);
        read(l, "x_per_km", t.line_type.x_per_km);
        read(l, "c_sh_per_km", t.line_type.c_sh_per_km);
      }
      if (s.contains("base")) {
        const auto& b = s.at("base");
        check_keys(b, {"v_base", "s_base", "f_nominal"}, "synthesis.base");
        read(b, "v_base", t.base.v_base_kv);
        read(b, "s_base", t.base.s_base_mw);
        read(b, "f_nominal", t.base.f_nominal_hz);
      }
      t.validate();
    }
    if (j.contains("generate")) {
      check_keys(j.at("generate"), {"n_grids"}, "generate");
      read(j.at("generate"), "n_grids", c.n_grids);
      if (c.n_grids < 1) throw GridError("generate.n_grids must be positive");
    }
    if (j.contains("assess")) {
      const auto& a = j.at("assess");
      check_keys(a, {"n_samples", "t_end", "rtol", "atol", "check_dt", "settle_stop", "settle_v_tol", "settle_omega_tol"},
                 "assess");
      read(a, "n_samples", c.assess.n_samples);
      read(a, "t_end", c.assess.t_end);
      read(a, "rtol", c.assess.rtol);
      read(a, "atol", c.assess.atol);
      read(a, "check_dt", c.assess.monitor.check_dt);
      read(a, "settle_stop", c.assess.monitor.settle_stop);
      read(a, "settle_v_tol", c.assess.monitor.settle_v_tol);
      read(a, "settle_omega_tol", c.assess.monitor.settle_omega_tol);
      if (c.assess.n_samples < 1 || !(c.assess.t_end > 0.0) || !(c.assess.rtol > 0.0) || !(c.assess.atol > 0.0) ||
          !(c.assess.monitor.check_dt > 0.0)) {
        throw GridError("invalid assess settings");
      }
    }
    if (j.contains("curve")) c.curve = j.at("curve").get<frt::RideThroughCurve>();
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, {"gbt", "tag", "tag_reg", "val_fraction", "test_fraction", "seeds"}, "train");
      c.train = surrogate::train_config_from_json(t);
      read(t, "val_fraction", c.val_fraction);
      read(t, "test_fraction", c.test_fraction);
      read(t, "seeds", c.train_seeds);
      if (c.train_seeds.empty()) throw GridError("train.seeds must not be empty");
    }
    if (j.contains("case")) {
      check_keys(j.at("case"), {"transformer_length_km"}, "case");
      read(j.at("case"), "transformer_length_km", c.transformer_length_km);
      if (!(c.transformer_length_km > 0.0)) throw GridError("case.transformer_length_km must be positive");
    }
  } catch (const nlohmann::json::exception& e) {
    throw GridError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
  nlohmann::json j;
  j["tool"] = "gridfrt";
  j["version"] = GRIDFRT_VERSION;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["artifacts"] = m.artifacts;
  write_json_file(out_dir / "manifest.json", j);
}

}  // namespace gridfrt::cli
