#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridfrt/surrogate/gbt.hpp"
#include "gridfrt/surrogate/linreg.hpp"
#include "gridfrt/surrogate/tag.hpp"

namespace gridfrt::surrogate {

enum class ModelKind { LinReg, Gbt, Tag, TagReg };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);
/// Table row label: linreg, GBT, TAG, TAGreg.
std::string_view display_name(ModelKind k);
inline constexpr bool is_stochastic(ModelKind k) { return k == ModelKind::Tag || k == ModelKind::TagReg; }

struct TrainConfig {
  GbtConfig gbt;
  TagConfig tag = TagConfig::preset_named("desk");
  TagConfig tag_reg = TagConfig::preset_named("desk_reg");
};

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

std::unique_ptr<Model> train_model(ModelKind kind, const std::vector<DatasetRecord>& train,
                                   const std::vector<DatasetRecord>& val, const TrainConfig& cfg,
                                   std::uint64_t seed, std::vector<EpochRecord>* history = nullptr);

struct Metrics {
  double r2 = 0.0;
  double rho = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

/// Pooled over labelled buses of all records. r2 / rho are NaN when labels
/// (or, for rho, predictions) are constant.
Metrics evaluate(const Model& model, std::span<const DatasetRecord> records);

struct ReportRow {
  ModelKind kind = ModelKind::LinReg;
  Metrics test_mean;
  Metrics case_mean;
  std::optional<Metrics> test_std;  // present for stochastic models
  std::optional<Metrics> case_std;
  std::vector<Metrics> test_runs;
  std::vector<Metrics> case_runs;
};

/// Trains every kind on `train`, selects on `val`, and scores on `test` and on
/// the unseen `case_records`. Stochastic kinds repeat over `seeds` (at least 3
/// for a spread); deterministic kinds train once.
std::vector<ReportRow> generalization_report(std::span<const ModelKind> kinds,
                                             const std::vector<DatasetRecord>& train,
                                             const std::vector<DatasetRecord>& val,
                                             const std::vector<DatasetRecord>& test,
                                             const std::vector<DatasetRecord>& case_records,
                                             const TrainConfig& cfg, std::span<const std::uint64_t> seeds);

/// model,test_r2,test_r2_std,case_r2,case_r2_std,test_rho,test_rho_std,case_rho,case_rho_std
void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows);

}  // namespace gridfrt::surrogate
