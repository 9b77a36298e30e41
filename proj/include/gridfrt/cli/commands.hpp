#pragma once

// Subcommand implementations. Each writes into CommonOptions::out and finishes
// with a manifest.json. Errors are reported by exception:
// UsageError -> exit 1, GridError (bad data or config) -> 2,
// NumericalError -> 3.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridfrt/cli/config.hpp"

namespace gridfrt::cli {

struct CommonOptions {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> config;
  int jobs = 1;
  std::filesystem::path out;
  bool force = false;
};

void cmd_generate(const CommonOptions& o, std::optional<int> n_grids);
void cmd_assess(const CommonOptions& o, const std::filesystem::path& grids, std::optional<long> n_samples,
                const std::optional<std::filesystem::path>& curve_file);
void cmd_adapt_case(const CommonOptions& o, const std::filesystem::path& case_file);
void cmd_dataset(const CommonOptions& o, const std::filesystem::path& grids, const std::filesystem::path& results);
void cmd_train(const CommonOptions& o, const std::filesystem::path& dataset, const std::vector<std::string>& models);
void cmd_eval(const CommonOptions& o, const std::filesystem::path& dataset, const std::filesystem::path& case_dataset,
              const std::vector<std::string>& models);
void cmd_plotdata(const CommonOptions& o, const std::filesystem::path& assess_dir,
                  const std::optional<std::filesystem::path>& train_dir,
                  const std::optional<std::filesystem::path>& dataset);

/// Grid files (grid_NNNN.json) of a directory or of its grids/ subdirectory,
/// sorted by id.
std::vector<std::pair<int, std::filesystem::path>> list_grids(const std::filesystem::path& dir);

}  // namespace gridfrt::cli
