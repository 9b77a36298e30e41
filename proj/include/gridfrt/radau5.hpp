#pragma once

// Three-stage Radau IIA (order 5) integrator for semi-explicit index-1 DAEs
// M y' = F(y) with a diagonal 0/1 mass matrix. Simplified Newton on the
// transformed stage system (one real and one complex linear solve per
// iteration), embedded error estimate and collocation-polynomial dense output.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gridfrt::dynamics {

/// M y' = F(y) with M = diag(differential_mask).
class SemiExplicitDae {
 public:
  virtual ~SemiExplicitDae() = default;
  [[nodiscard]] virtual int dim() const = 0;
  [[nodiscard]] virtual const std::vector<char>& differential_mask() const = 0;
  virtual void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& out) const = 0;
  virtual void jacobian(const Eigen::VectorXd& y, Eigen::MatrixXd& out) const = 0;
};

class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cubic collocation polynomial of one accepted step.
struct StepPolynomial {
  double t0 = 0.0;
  double h = 0.0;
  Eigen::VectorXd y0;
  Eigen::VectorXd stage1;  // y at t0 + c1 h
  Eigen::VectorXd stage2;  // y at t0 + c2 h
  Eigen::VectorXd y1;      // y at t0 + h

  [[nodiscard]] double t1() const { return t0 + h; }
  void eval(double t, Eigen::VectorXd& out) const;
};

struct Radau5Options {
  double rtol = 1e-6;
  double atol = 1e-6;
  double h0 = 1e-4;
  double h_max = 0.0;  // 0: t_end - t0
  long max_steps = 200000;
  bool store_steps = true;
};

struct Radau5Stats {
  long steps = 0;
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  long jacobians = 0;
  long decompositions = 0;
};

/// Returning false from the observer stops the integration after that step.
using StepObserver = std::function<bool(const StepPolynomial&)>;

class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double t0, Eigen::VectorXd y0);

  [[nodiscard]] double t_begin() const { return t0_; }
  [[nodiscard]] double t_end() const { return steps_.empty() ? t0_ : steps_.back().t1(); }
  [[nodiscard]] const std::vector<StepPolynomial>& steps() const { return steps_; }
  [[nodiscard]] const Eigen::VectorXd& initial_state() const { return y_initial_; }
  /// Step end times, starting with t0 (strictly increasing).
  [[nodiscard]] std::vector<double> times() const;
  /// Dense output. Throws std::out_of_range outside [t_begin, t_end].
  [[nodiscard]] Eigen::VectorXd state_at(double t) const;

  bool stopped_early = false;
  Radau5Stats stats;

  void push(StepPolynomial step) { steps_.push_back(std::move(step)); }
  void keep_only_last() {
    if (steps_.size() > 1) steps_.erase(steps_.begin(), steps_.end() - 1);
  }

 private:
  double t0_ = 0.0;
  Eigen::VectorXd y_initial_;
  std::vector<StepPolynomial> steps_;
};

/// Integrates from (t0, y0) to t_end. Throws IntegrationFailure on step-size
/// collapse, step budget exhaustion or non-finite states.
Trajectory radau5_integrate(const SemiExplicitDae& dae, double t0, const Eigen::VectorXd& y0, double t_end,
                            const Radau5Options& opts, const StepObserver& observer = {});

}  // namespace gridfrt::dynamics
