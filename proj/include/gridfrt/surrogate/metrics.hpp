#pragma once

#include <span>

#include <Eigen/Dense>

namespace gridfrt::surrogate {

/// 1 - SS_res / SS_tot. Throws std::invalid_argument for fewer than two points
/// or constant targets.
double r2_score(std::span<const double> y, std::span<const double> y_hat);

/// Ranks starting at 1, ties share their average rank.
Eigen::VectorXd average_ranks(std::span<const double> x);

/// Pearson correlation of average ranks. Throws std::invalid_argument for
/// fewer than two points or a constant input.
double spearman_rho(std::span<const double> y, std::span<const double> y_hat);

double mean_squared_error(std::span<const double> y, std::span<const double> y_hat);

}  // namespace gridfrt::surrogate
