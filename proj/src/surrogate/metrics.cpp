#include "gridfrt/surrogate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gridfrt::surrogate {

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("target and prediction lengths differ");
  if (y.size() < 2) throw std::invalid_argument("metrics need at least two points");
}

}  // namespace

double r2_score(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("R^2 is undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

Eigen::VectorXd average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Eigen::VectorXd ranks(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks(static_cast<Eigen::Index>(order[k])) = avg;
    i = j;
  }
  return ranks;
}

double spearman_rho(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  const Eigen::VectorXd a = average_ranks(y);
  const Eigen::VectorXd b = average_ranks(y_hat);
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (denom == 0.0) throw std::invalid_argument("Spearman rho is undefined for constant input");
  return da.dot(db) / denom;
}

double mean_squared_error(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.empty()) throw std::invalid_argument("invalid MSE input");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace gridfrt::surrogate
