#include "gridfrt/surrogate/gbt.hpp"

#include <algorithm>
#include <numeric>

namespace gridfrt::surrogate {

namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& t;
  int max_depth;
  int min_leaf;
  std::vector<TreeNode>& nodes;

  int build(std::vector<int> rows, int depth) {
    double sum = 0.0;
    for (int r : rows) sum += t(r);
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].value = sum / static_cast<double>(rows.size());
    if (depth >= max_depth || static_cast<int>(rows.size()) < 2 * min_leaf) return id;

    const double n = static_cast<double>(rows.size());
    double best_gain = 1e-12 * std::max(1.0, sum * sum / n);
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> order = rows;
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_sum += t(order[i]);
        const double lo = x(order[i], f);
        const double hi = x(order[i + 1], f);
        if (lo == hi) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right_sum = sum - left_sum;
        // SSE reduction relative to the parent.
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<int> left;
    std::vector<int> right;
    for (int r : rows) (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int l = build(std::move(left), depth + 1);
    const int rr = build(std::move(right), depth + 1);
    nodes[id].left = l;
    nodes[id].right = rr;
    return id;
  }
};

}  // namespace

RegressionTree RegressionTree::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, int max_depth,
                                   int min_samples_leaf) {
  if (x.rows() == 0 || x.rows() != target.size()) throw std::invalid_argument("tree: empty or mismatched data");
  RegressionTree tree;
  std::vector<int> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  Builder{x, target, max_depth, std::max(min_samples_leaf, 1), tree.nodes}.build(std::move(rows), 0);
  return tree;
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int i = 0;
  while (nodes[i].feature >= 0) i = row(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

GradientBoosting GradientBoosting::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtConfig& cfg,
                                       std::vector<double>* train_loss) {
  if (x.rows() == 0 || x.rows() != y.size()) throw std::invalid_argument("gbt: empty or mismatched training data");
  if (cfg.n_trees < 0 || cfg.max_depth < 0 || !(cfg.learning_rate > 0.0)) throw std::invalid_argument("gbt: bad config");
  GradientBoosting m;
  m.cfg_ = cfg;
  m.base_ = y.mean();
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(y.size(), m.base_);
  if (train_loss) train_loss->assign(1, (y - pred).squaredNorm() / static_cast<double>(y.size()));
  for (int k = 0; k < cfg.n_trees; ++k) {
    const Eigen::VectorXd residual = y - pred;
    RegressionTree tree = RegressionTree::fit(x, residual, cfg.max_depth, cfg.min_samples_leaf);
    for (Eigen::Index r = 0; r < x.rows(); ++r) pred(r) += cfg.learning_rate * tree.predict(x.row(r));
    m.trees_.push_back(std::move(tree));
    if (train_loss) train_loss->push_back((y - pred).squaredNorm() / static_cast<double>(y.size()));
  }
  return m;
}

Eigen::VectorXd GradientBoosting::predict_rows(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), base_);
  for (const auto& tree : trees_) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r) += cfg_.learning_rate * tree.predict(x.row(r));
  }
  return out;
}

Eigen::VectorXd GradientBoosting::predict(const DatasetRecord& record) const { return predict_rows(record.features); }

nlohmann::json GradientBoosting::to_json() const {
  auto trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {{"kind", kind()},
          {"config",
           {{"n_trees", cfg_.n_trees},
            {"max_depth", cfg_.max_depth},
            {"learning_rate", cfg_.learning_rate},
            {"min_samples_leaf", cfg_.min_samples_leaf}}},
          {"base", base_},
          {"trees", std::move(trees)}};
}

GradientBoosting GradientBoosting::from_json(const nlohmann::json& j) {
  GradientBoosting m;
  const auto& c = j.at("config");
  m.cfg_.n_trees = c.at("n_trees").get<int>();
  m.cfg_.max_depth = c.at("max_depth").get<int>();
  m.cfg_.learning_rate = c.at("learning_rate").get<double>();
  m.cfg_.min_samples_leaf = c.at("min_samples_leaf").get<int>();
  m.base_ = j.at("base").get<double>();
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t) {
      tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                            n.at(4).get<double>()});
    }
    m.trees_.push_back(std::move(tree));
  }
  return m;
}

}  // namespace gridfrt::surrogate
