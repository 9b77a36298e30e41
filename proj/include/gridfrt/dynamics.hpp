#pragma once

// Differential-algebraic grid model.
//
// State layout, in bus order:
//   NormalForm: Re v, Im v, δω   (differential)
//   PQLoad:     Re v, Im v       (algebraic, S(v) = p_set + j q_set)
//   Slack:      Re v, Im v       (algebraic, v fixed: infinite bus)
//
// The model is written as M y' = F(y); for algebraic rows F = -(constraint),
// so the residual M y' - F(y) carries the constraint with its natural sign.

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridfrt/core_model.hpp"
#include "gridfrt/radau5.hpp"

namespace gridfrt::dynamics {

/// Right-hand side of one normal-form bus: dω/dt and (dv/dt)/v.
struct NormalFormRates {
  double omega_dot = 0.0;
  Complex v_rate;
};

/// Below this voltage magnitude the normal form is singular.
inline constexpr double kSingularVoltage = 1e-9;

/// Throws NumericalError when |v| < kSingularVoltage.
NormalFormRates normal_form_rhs(const NormalFormParams& params, Complex v, double delta_omega, double p, double q,
                                double v_set, double p_set, double q_set);

/// Complex power injected into the network at every bus, S = v (Y v)^*.
std::vector<Complex> network_power(const Eigen::MatrixXcd& y_bus, std::span<const Complex> voltages);

class GridDae final : public SemiExplicitDae {
 public:
  /// The slack is held at slack_voltage (default v_set at angle 0).
  explicit GridDae(Grid grid, std::optional<Complex> slack_voltage = std::nullopt);

  [[nodiscard]] int dim() const override { return dim_; }
  [[nodiscard]] const std::vector<char>& differential_mask() const override { return mask_; }
  void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& out) const override;
  void jacobian(const Eigen::VectorXd& y, Eigen::MatrixXd& out) const override;

  /// M y' - F(y).
  [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& y, const Eigen::VectorXd& ydot) const;
  /// Infinity norm of the algebraic rows of the residual.
  [[nodiscard]] double algebraic_residual(const Eigen::VectorXd& y) const;

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const Eigen::MatrixXcd& admittance() const { return y_bus_; }
  [[nodiscard]] Complex slack_voltage() const { return slack_voltage_; }

  [[nodiscard]] int voltage_offset(int bus) const { return v_offset_[bus]; }
  /// Offset of δω for NormalForm buses, -1 otherwise.
  [[nodiscard]] int omega_offset(int bus) const { return w_offset_[bus]; }
  [[nodiscard]] std::vector<int> algebraic_indices() const;
  [[nodiscard]] std::vector<int> differential_indices() const;

  [[nodiscard]] Complex voltage(const Eigen::VectorXd& y, int bus) const {
    return {y(v_offset_[bus]), y(v_offset_[bus] + 1)};
  }
  [[nodiscard]] std::vector<Complex> voltages(const Eigen::VectorXd& y) const;
  [[nodiscard]] double omega(const Eigen::VectorXd& y, int bus) const {
    return w_offset_[bus] < 0 ? 0.0 : y(w_offset_[bus]);
  }
  void set_voltage(Eigen::VectorXd& y, int bus, Complex v) const {
    y(v_offset_[bus]) = v.real();
    y(v_offset_[bus] + 1) = v.imag();
  }

  /// Steady state with δω = 0 and the operating-point voltages.
  [[nodiscard]] Eigen::VectorXd state_from_operating_point(const OperatingPoint& op) const;

 private:
  Grid grid_;
  Eigen::MatrixXcd y_bus_;
  Complex slack_voltage_;
  int dim_ = 0;
  std::vector<char> mask_;
  std::vector<int> v_offset_;
  std::vector<int> w_offset_;
};

struct IntegrateOptions {
  double rtol = 1e-6;
  double atol = 1e-6;
  double h0 = 1e-4;
  bool store_steps = true;
};

/// Adaptive Radau IIA integration from a consistent state over [0, t_end].
/// Throws IntegrationFailure if the initial state violates the algebraic
/// constraints by more than 1e-8 or the integrator breaks down.
Trajectory integrate(const GridDae& dae, const Eigen::VectorXd& y0, double t_end, const IntegrateOptions& opts = {},
                     const StepObserver& observer = {});

/// Central finite-difference Jacobian of F (test and diagnostics helper).
Eigen::MatrixXd finite_difference_jacobian(const SemiExplicitDae& dae, const Eigen::VectorXd& y, double step = 1e-6);

/// Reduced state matrix J_xx - J_xz J_zz^{-1} J_zx of the linearisation at y.
/// Throws NumericalError when the algebraic block is singular.
Eigen::MatrixXd reduced_state_matrix(const Eigen::MatrixXd& jacobian, const std::vector<char>& differential_mask);

/// CSV dump with columns t,bus_id,v_abs,theta,delta_omega at the given times.
void write_trajectory_csv(const std::filesystem::path& path, const GridDae& dae, const Trajectory& traj,
                          std::span<const double> times);

}  // namespace gridfrt::dynamics
