#pragma once

// Synthetic grid pipeline: topology -> line parameters -> net power and bus
// kinds -> reactive dispatch by load flow -> voltage, small-signal and line
// loading validation, with bounded retries on fresh sub-seeds.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gridfrt/core_model.hpp"
#include "gridfrt/topogen.hpp"

namespace gridfrt::synthesis {

struct SynthesisConfig {
  double p0 = 1.31;     // bimodal mode location, p.u.
  double sigma = 0.2;   // mode width, p.u. (free parameter)
  std::array<double, 3> nf_mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // NF1, NF2, NF3
  double grid_forming_share = 0.5;  // weight of the positive mode
  double v_target = 1.0;
  double v_tol = 0.05;
  double loading_margin = 0.5;
  double thermal_current_ka = 1.8;
  double eps_eig = 1e-6;
  int max_retries = 5;
  int n_min = 20;
  int n_max = 30;
  topogen::GrowthConfig growth;  // n_buses and rng_seed are drawn per attempt
  LineParams line_type = kOverhead380kV;
  PerUnitBase base;

  void validate() const;
  /// Thermal limit of one line in p.u. apparent power.
  [[nodiscard]] double line_rating_pu() const;
};

/// Equal-weight (by default) two-component Gaussian mixture at ±p0.
double sample_net_power(const SynthesisConfig& cfg, std::mt19937_64& rng);
double net_power_cdf(const SynthesisConfig& cfg, double x);

class InfeasibleDispatch : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Kinds from given net powers: positive -> grid forming (the largest becomes
/// the slack, the rest NormalForm with a parametrisation drawn from nf_mix),
/// negative -> PQLoad. Generation is scaled so that Σ p_set = 0 and the slack
/// only absorbs losses.
Grid assign_bus_kinds(const topogen::Skeleton& skeleton, std::vector<Line> lines, std::vector<double> net_power,
                      const SynthesisConfig& cfg, std::mt19937_64& rng);

/// Samples net powers (resampling draws where every bus has the same sign,
/// at most 100 times) and assigns kinds.
Grid assign_bus_kinds(const topogen::Skeleton& skeleton, std::vector<Line> lines, const SynthesisConfig& cfg,
                      std::mt19937_64& rng);

struct LoadFlowOptions {
  double tol = 1e-10;
  int max_iterations = 30;
};

struct LoadFlowResult {
  OperatingPoint op;
  double residual = 0.0;  // ∞-norm of the specified-quantity mismatch
  int iterations = 0;
};

/// Newton-Raphson in polar coordinates. NormalForm buses are PV buses at
/// v_set, PQLoad buses PQ, the slack fixes v_set at angle 0.
/// Throws InfeasibleDispatch when it does not converge.
LoadFlowResult newton_load_flow(const Grid& grid, const LoadFlowOptions& opts = {});

/// Copies the dispatch into the grid: NormalForm q_set and the slack's p/q.
Grid apply_dispatch(Grid grid, const OperatingPoint& op);

struct SmallSignalResult {
  bool stable = false;
  std::vector<Complex> eigenvalues;  // of the reduced state matrix
  double max_real = 0.0;             // over eigenvalues excluding the zero mode
  bool zero_mode_excluded = false;
};

/// Linearises the DAE at the operating point, eliminates the algebraic
/// variables and requires Re(λ) < -eps for every eigenvalue except at most one
/// numerically zero mode. Throws NumericalError for a singular algebraic block.
SmallSignalResult small_signal_check(const Grid& grid, const OperatingPoint& op, double eps_eig = 1e-6);

struct LineLoading {
  std::vector<Complex> s_from;
  std::vector<Complex> s_to;
  std::vector<double> loading;  // max(|S_from|, |S_to|) / rating
  std::vector<int> overloaded;  // lines above loading_margin
  [[nodiscard]] bool ok() const { return overloaded.empty(); }
};

LineLoading line_loading_check(const Grid& grid, const OperatingPoint& op, const SynthesisConfig& cfg);

struct Rejection {
  int attempt = 0;
  std::uint64_t seed = 0;
  std::string stage;
  std::string reason;
};

/// Re-runs load flow and all three validation stages on a grid whose kinds
/// and set points are already assigned. An empty stage means accepted.
struct Verdict {
  std::string stage;
  std::string reason;
  LoadFlowResult load_flow;
  [[nodiscard]] bool accepted() const { return stage.empty(); }
};

Verdict validate_operating_grid(const Grid& grid, const SynthesisConfig& cfg);

struct SynthesizedGrid {
  Grid grid;  // dispatch applied
  OperatingPoint op;
  std::vector<Rejection> trace;
  std::uint64_t accepted_seed = 0;
};

class SynthesisError : public NumericalError {
 public:
  SynthesisError(const std::string& what, std::vector<Rejection> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  [[nodiscard]] const std::vector<Rejection>& trace() const { return trace_; }

 private:
  std::vector<Rejection> trace_;
};

/// Deterministic sub-seed for retry attempt k of a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Pure function of (cfg, seed). Throws SynthesisError when max_retries
/// attempts are all rejected.
SynthesizedGrid synthesize_grid(const SynthesisConfig& cfg, std::uint64_t seed);

}  // namespace gridfrt::synthesis
