#pragma once

// Run configuration (one JSON document covering every stage) and the run
// manifest written next to each command's outputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfrt/frt.hpp"
#include "gridfrt/surrogate/training.hpp"
#include "gridfrt/synthesis.hpp"

namespace gridfrt::cli {

/// Raised for command-line misuse (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  synthesis::SynthesisConfig synthesis;
  int n_grids = 50;
  frt::AssessOptions assess;
  frt::RideThroughCurve curve = frt::RideThroughCurve::standard();
  surrogate::TrainConfig train;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::vector<std::uint64_t> train_seeds{1, 2, 3};
  double transformer_length_km = 10.0;
};

nlohmann::json config_to_json(const RunConfig& c);
/// Starts from the defaults and applies every key present. Unknown keys and
/// invalid values throw GridError.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config;
  nlohmann::json inputs = nlohmann::json::object();
  std::vector<std::string> artifacts;  // relative to the output directory
};

/// manifest.json in out_dir. Contains no timestamps.
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m);

}  // namespace gridfrt::cli
