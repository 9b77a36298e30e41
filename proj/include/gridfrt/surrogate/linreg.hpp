#pragma once

#include "gridfrt/surrogate/features.hpp"
#include "gridfrt/surrogate/model.hpp"

namespace gridfrt::surrogate {

/// Ordinary least squares with intercept on standardised features
/// (minimum-norm solution when the design is rank deficient).
class LinearRegression final : public Model {
 public:
  static LinearRegression fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  static LinearRegression from_json(const nlohmann::json& j);

  [[nodiscard]] std::string kind() const override { return "linreg"; }
  [[nodiscard]] Eigen::VectorXd predict(const DatasetRecord& record) const override;
  [[nodiscard]] Eigen::VectorXd predict_rows(const Eigen::MatrixXd& x) const;
  [[nodiscard]] nlohmann::json to_json() const override;

  /// Coefficients in raw feature units.
  [[nodiscard]] Eigen::VectorXd raw_coefficients() const;
  [[nodiscard]] double raw_intercept() const;

 private:
  Standardizer std_;
  Eigen::VectorXd weights_;
  double intercept_ = 0.0;
};

}  // namespace gridfrt::surrogate
