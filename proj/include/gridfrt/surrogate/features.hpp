#pragma once

#include <array>
#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridfrt/core_model.hpp"

namespace gridfrt::surrogate {

inline constexpr int kNumFeatures = 8;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "p_set", "q_set", "re_bx", "g_k", "b_k", "b_sh_k", "is_slack", "is_load"};

/// N×8 nodal features. Line sums run over incident lines: g_k = Σ Re(y_series),
/// b_k = Σ Im(y_series), b_sh_k = Σ Im(y_shunt) with the total line shunt.
/// re_bx is 0 for PQLoad and Slack buses.
Eigen::MatrixXd build_features(const Grid& grid);

/// Per-column affine scaling fitted on training rows. Columns with zero
/// variance keep scale 1 (centring only).
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  static Standardizer identity(int cols);
  [[nodiscard]] Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  [[nodiscard]] Eigen::MatrixXd inverse(const Eigen::MatrixXd& z) const;
};

nlohmann::json standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

}  // namespace gridfrt::surrogate
