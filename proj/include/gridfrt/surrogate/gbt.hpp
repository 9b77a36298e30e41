#pragma once

#include <vector>

#include "gridfrt/surrogate/model.hpp"

namespace gridfrt::surrogate {

struct GbtConfig {
  int n_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
};

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

/// Least-squares regression tree with exact greedy splits (x <= threshold goes left).
struct RegressionTree {
  std::vector<TreeNode> nodes;

  static RegressionTree fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, int max_depth,
                            int min_samples_leaf);
  [[nodiscard]] double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

/// Stagewise boosting on squared loss from the training mean; raw features.
class GradientBoosting final : public Model {
 public:
  /// train_loss, when given, receives the training MSE after each stage
  /// (entry 0 is the constant model).
  static GradientBoosting fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtConfig& cfg,
                              std::vector<double>* train_loss = nullptr);
  static GradientBoosting from_json(const nlohmann::json& j);

  [[nodiscard]] std::string kind() const override { return "gbt"; }
  [[nodiscard]] Eigen::VectorXd predict(const DatasetRecord& record) const override;
  [[nodiscard]] Eigen::VectorXd predict_rows(const Eigen::MatrixXd& x) const;
  [[nodiscard]] nlohmann::json to_json() const override;

  [[nodiscard]] double base() const { return base_; }
  [[nodiscard]] std::size_t n_trees() const { return trees_.size(); }

 private:
  GbtConfig cfg_;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
};

}  // namespace gridfrt::surrogate
