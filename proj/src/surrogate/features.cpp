#include "gridfrt/surrogate/features.hpp"

namespace gridfrt::surrogate {

Eigen::MatrixXd build_features(const Grid& grid) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(grid.size(), kNumFeatures);
  for (const auto& b : grid.buses) {
    x(b.id, 0) = b.p_set;
    x(b.id, 1) = b.q_set;
    x(b.id, 2) = b.kind == BusKind::NormalForm && b.params ? b.params->re_bx() : 0.0;
    x(b.id, 6) = b.kind == BusKind::Slack ? 1.0 : 0.0;
    x(b.id, 7) = b.kind == BusKind::PQLoad ? 1.0 : 0.0;
  }
  for (const auto& l : grid.lines) {
    for (int end : {l.from, l.to}) {
      x(end, 3) += l.y_series.real();
      x(end, 4) += l.y_series.imag();
      x(end, 5) += l.y_shunt.imag();
    }
  }
  return x;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit a standardizer on zero rows");
  Standardizer s;
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean(c)).square().mean();
    s.scale(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(int cols) {
  return {Eigen::RowVectorXd::Zero(cols), Eigen::RowVectorXd::Ones(cols)};
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& z) const {
  return (z.array().rowwise() * scale.array()).matrix().rowwise() + mean;
}

nlohmann::json standardizer_to_json(const Standardizer& s) {
  return {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
          {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto sc = j.at("scale").get<std::vector<double>>();
  if (m.size() != sc.size()) throw GridError("standardizer mean/scale length mismatch");
  Standardizer s;
  s.mean = Eigen::Map<const Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  s.scale = Eigen::Map<const Eigen::RowVectorXd>(sc.data(), static_cast<Eigen::Index>(sc.size()));
  return s;
}

}  // namespace gridfrt::surrogate
