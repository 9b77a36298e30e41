#pragma once

// One record per grid: topology, N×8 features, per-bus labels and the mask of
// labelled buses (every bus except the slack).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridfrt/core_model.hpp"

namespace gridfrt::surrogate {

struct DatasetRecord {
  std::string grid_id;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixXd features;  // N×8
  Eigen::VectorXd labels;    // p_frt; 0 where unlabelled
  std::vector<char> mask;    // 1 = labelled

  [[nodiscard]] int size() const { return static_cast<int>(features.rows()); }
  [[nodiscard]] int labelled() const;
  /// Throws GridError: shape mismatch, labels outside [0, 1], edges out of
  /// range, or a mask that does not exclude exactly one bus.
  void validate() const;
};

/// Labels are given per bus; the slack must have none and every other bus one.
DatasetRecord make_record(std::string grid_id, const Grid& grid, std::span<const std::optional<double>> labels);

void write_jsonl(const std::filesystem::path& path, std::span<const DatasetRecord> records);
std::vector<DatasetRecord> read_jsonl(const std::filesystem::path& path);

struct Split {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Whole-grid split after a seeded shuffle. Sizes: test = round(n · test_frac),
/// val = round(n · val_frac), the rest train; each part gets at least one grid
/// when n >= 3.
Split split_by_grid(int n_records, std::uint64_t seed, double val_frac = 0.15, double test_frac = 0.15);

std::vector<DatasetRecord> select(std::span<const DatasetRecord> records, std::span<const int> indices);

/// Labelled rows of all records stacked: features and labels.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> pooled_rows(std::span<const DatasetRecord> records);

}  // namespace gridfrt::surrogate
