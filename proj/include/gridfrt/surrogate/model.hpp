#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridfrt/surrogate/dataset.hpp"

namespace gridfrt::surrogate {

/// A fitted per-bus regressor. Predictions cover every bus of the record,
/// the slack included; metrics only look at labelled buses.
class Model {
 public:
  virtual ~Model() = default;
  [[nodiscard]] virtual std::string kind() const = 0;
  [[nodiscard]] virtual Eigen::VectorXd predict(const DatasetRecord& record) const = 0;
  [[nodiscard]] virtual nlohmann::json to_json() const = 0;
};

/// Dispatches on the "kind" field. Throws GridError for unknown kinds.
std::unique_ptr<Model> model_from_json(const nlohmann::json& j);

}  // namespace gridfrt::surrogate
