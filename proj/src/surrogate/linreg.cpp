#include "gridfrt/surrogate/linreg.hpp"

#include <Eigen/QR>

namespace gridfrt::surrogate {

LinearRegression LinearRegression::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("linreg: empty or mismatched training data");
  LinearRegression m;
  m.std_ = Standardizer::fit(x);
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.leftCols(x.cols()) = m.std_.transform(x);
  design.col(x.cols()).setOnes();
  const Eigen::VectorXd beta = design.completeOrthogonalDecomposition().solve(y);
  m.weights_ = beta.head(x.cols());
  m.intercept_ = beta(x.cols());
  return m;
}

Eigen::VectorXd LinearRegression::predict_rows(const Eigen::MatrixXd& x) const {
  return (std_.transform(x) * weights_).array() + intercept_;
}

Eigen::VectorXd LinearRegression::predict(const DatasetRecord& record) const { return predict_rows(record.features); }

Eigen::VectorXd LinearRegression::raw_coefficients() const { return weights_.array() / std_.scale.transpose().array(); }

double LinearRegression::raw_intercept() const { return intercept_ - raw_coefficients().dot(std_.mean.transpose()); }

nlohmann::json LinearRegression::to_json() const {
  return {{"kind", kind()},
          {"standardizer", standardizer_to_json(std_)},
          {"weights", std::vector<double>(weights_.data(), weights_.data() + weights_.size())},
          {"intercept", intercept_}};
}

LinearRegression LinearRegression::from_json(const nlohmann::json& j) {
  LinearRegression m;
  m.std_ = standardizer_from_json(j.at("standardizer"));
  const auto w = j.at("weights").get<std::vector<double>>();
  m.weights_ = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.intercept_ = j.at("intercept").get<double>();
  return m;
}

}  // namespace gridfrt::surrogate
