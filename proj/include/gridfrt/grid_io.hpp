#pragma once

// On-disk grid format (JSON) and the operating-point sidecar.
//
//   {base:{v_base,s_base,f_nominal},
//    buses:[{id,kind,params?,p_set,q_set,v_set?,x?,y?}],
//    lines:[{from,to,length,r_per_km,x_per_km,c_sh_per_km}]}
//
// Admittances are not stored; they are recomputed from the physical line data
// on load, so a round trip reproduces the in-memory grid bit for bit.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "gridfrt/core_model.hpp"

namespace gridfrt {

nlohmann::json normal_form_to_json(const NormalFormParams& p);
NormalFormParams normal_form_from_json(const nlohmann::json& j);

nlohmann::json grid_to_json(const Grid& grid);
/// Parses and validates; throws GridError on schema or invariant violations.
Grid grid_from_json(const nlohmann::json& j);

/// Sidecar keyed by bus id: {"0": {v, theta, p, q}, ...}.
nlohmann::json operating_point_to_json(const OperatingPoint& op);
OperatingPoint operating_point_from_json(const nlohmann::json& j, int n_buses);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Grid read_grid(const std::filesystem::path& path);
void write_grid(const std::filesystem::path& path, const Grid& grid);

}  // namespace gridfrt
