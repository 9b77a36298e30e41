#pragma once

// Post-clearance states: a Sobol point is mapped to a voltage (and, at
// grid-forming buses, a frequency offset) at one target bus, and the rest of
// the state is projected back onto the algebraic constraints.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gridfrt/core_model.hpp"
#include "gridfrt/dynamics.hpp"
#include "gridfrt/sobol.hpp"

namespace gridfrt::perturb {

struct PerturbationSpec {
  int target_bus = 0;
  double v_mag = 1.0;        // p.u., (0, 1)
  double v_angle = 0.0;      // rad, [0, 2π)
  double freq_offset = 0.0;  // Hz, (-1, 1); NormalForm targets only

  [[nodiscard]] Complex voltage() const { return std::polar(v_mag, v_angle); }
};

/// 3 for NormalForm targets, 2 otherwise.
int sample_dimension(const Grid& grid, int target_bus);

/// Affine map of a unit-cube point: v_mag = u0, v_angle = 2π u1,
/// freq_offset = 2 u2 - 1 (only when the point has a third coordinate).
PerturbationSpec spec_from_unit_point(int target_bus, std::span<const double> u);

/// Draws the sampler's next point. Throws GridError for an invalid bus and
/// std::invalid_argument when the sampler dimension does not match the bus.
PerturbationSpec make_perturbation(SobolSampler& sampler, const Grid& grid, int target_bus);

/// Sample k (0-based) of a bus: Sobol index k + 1. Pure.
PerturbationSpec perturbation_at(const Grid& grid, int target_bus, std::uint64_t sample_index);

class NoConsistentState : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct ProjectionOptions {
  double tol = 1e-10;  // ∞-norm of the algebraic residual
  int max_iterations = 50;
  int max_backtracks = 30;
};

struct PostClearanceState {
  PerturbationSpec spec;
  Eigen::VectorXd y;
  double residual = 0.0;
  int iterations = 0;
  double delta_p = 0.0;  // Σ_b P_b(y) - P_b(op), network injections
  double delta_q = 0.0;
};

/// Pins the target voltage (and δω at a NormalForm target), starts every other
/// variable at the operating point and solves the PQ constraints by damped
/// Newton. At a NormalForm target only the other PQ voltages move. At a PQ
/// target the pinned constraint cannot be met by algebraic variables alone, so
/// the minimum-norm Gauss-Newton correction also moves NormalForm voltages.
/// Throws NoConsistentState when no state with residual < tol is found.
PostClearanceState consistent_init(const dynamics::GridDae& dae, const OperatingPoint& op,
                                   const PerturbationSpec& spec, const ProjectionOptions& opts = {});

struct SampleLogRow {
  int grid_id = 0;
  int bus_id = 0;
  std::uint64_t sample_idx = 0;
  PerturbationSpec spec;
  bool init_ok = false;
};

void write_sample_log(const std::filesystem::path& path, std::span<const SampleLogRow> rows);

}  // namespace gridfrt::perturb
