#pragma once

// Ride-through classification and per-bus fault-ride-through probabilities.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridfrt/core_model.hpp"
#include "gridfrt/dynamics.hpp"
#include "gridfrt/perturb.hpp"

namespace gridfrt::frt {

/// Piecewise-linear envelope through (t, v) points, constant outside them.
/// Two points with the same t encode a jump; the later value holds from t on.
struct Envelope {
  std::vector<std::pair<double, double>> points;

  [[nodiscard]] double at(double t) const;
  [[nodiscard]] double last_time() const { return points.empty() ? 0.0 : points.back().first; }
};

struct RideThroughCurve {
  Envelope low_v;
  Envelope high_v;
  double freq_band_hz = 2.0;

  /// Low voltage: 0.15 p.u. until 0.15 s, linear to 0.85 p.u. at 3 s.
  /// High voltage: 1.3 p.u. before 0.1 s, 1.2 p.u. after. Band ±2 Hz.
  static RideThroughCurve standard();
  /// Nothing can violate it.
  static RideThroughCurve unbounded();
  /// Admissible voltage band is empty: every trajectory violates it at t = 0.
  static RideThroughCurve empty_band();

  /// Time after which both envelopes are constant.
  [[nodiscard]] double horizon() const { return std::max(low_v.last_time(), high_v.last_time()); }
  /// Throws GridError: unsorted points, low above high somewhere, band <= 0.
  void validate() const;
};

void to_json(nlohmann::json& j, const RideThroughCurve& c);
void from_json(const nlohmann::json& j, RideThroughCurve& c);
RideThroughCurve read_curve(const std::filesystem::path& path);

struct Violation {
  double t = 0.0;
  int bus = 0;
  std::string quantity;  // "low_v", "high_v" or "freq"
  double value = 0.0;
};

struct MonitorOptions {
  double check_dt = 0.01;
  /// Stop as survived once t >= horizon and every |v| is within settle_v_tol of
  /// its operating value and every |δω| below settle_omega_tol (rad/s).
  bool settle_stop = false;
  double settle_v_tol = 0.01;
  double settle_omega_tol = 0.1;
};

/// Streams accepted integrator steps and checks the envelopes on a fixed time
/// grid of dense-output states.
class RideThroughMonitor {
 public:
  enum class Status { Running, Violated, Settled };

  RideThroughMonitor(const dynamics::GridDae& dae, const RideThroughCurve& curve, MonitorOptions opts,
                     std::vector<double> v_reference = {});

  /// Checks t = 0. Returns false when the state already violates.
  bool start(const Eigen::VectorXd& y0);
  /// Checks all grid times in (t0, t1] of the step. Returns false to stop.
  bool observe(const dynamics::StepPolynomial& step);

  [[nodiscard]] Status status() const { return status_; }
  [[nodiscard]] const std::optional<Violation>& violation() const { return violation_; }
  [[nodiscard]] double last_checked() const { return last_checked_; }

 private:
  bool check(double t, const Eigen::VectorXd& y);

  const dynamics::GridDae& dae_;
  const RideThroughCurve& curve_;
  MonitorOptions opts_;
  std::vector<double> v_ref_;
  long next_k_ = 0;
  double last_checked_ = 0.0;
  Status status_ = Status::Running;
  std::optional<Violation> violation_;
  Eigen::VectorXd buf_;
};

/// True iff every bus stays inside the voltage envelopes and every NormalForm
/// bus inside the frequency band on the check grid. Throws GridError when the
/// trajectory ends before the curve horizon.
bool classify(const dynamics::Trajectory& traj, const RideThroughCurve& curve, const dynamics::GridDae& dae,
              double check_dt = 0.01);

enum class Outcome { Survived, Violated, InitFailed, IntegrationFailed };
std::string_view to_string(Outcome o);

struct FrtResult {
  int bus_id = 0;
  long v_star = 0;
  long v_total = 0;
  double p_frt = 0.0;
  double std_err = 0.0;
  long n_init_failed = 0;
  long n_integ_failed = 0;

  /// p = v_star / v_total, SE = sqrt(p (1 - p) / v_total).
  static FrtResult from_counts(int bus_id, long v_star, long v_total, long n_init_failed = 0,
                               long n_integ_failed = 0);
};

struct AssessOptions {
  long n_samples = 100;
  std::uint64_t sample_offset = 0;  // first Sobol sample index
  double t_end = 30.0;
  double rtol = 1e-4;
  double atol = 1e-4;
  MonitorOptions monitor{0.01, true, 0.01, 0.1};
  perturb::ProjectionOptions projection;
};

struct SampleOutcome {
  std::uint64_t sample_idx = 0;
  perturb::PerturbationSpec spec;
  Outcome outcome = Outcome::Survived;
  double delta_p = 0.0;
  double delta_q = 0.0;
  double t_stop = 0.0;  // last checked time
};

struct BusAssessment {
  FrtResult result;
  std::vector<SampleOutcome> samples;
};

/// perturb -> consistent init -> integrate -> classify for one sample.
SampleOutcome run_sample(const dynamics::GridDae& dae, const OperatingPoint& op, const RideThroughCurve& curve,
                         int bus, std::uint64_t sample_idx, const AssessOptions& opts);

BusAssessment aggregate(int bus_id, std::vector<SampleOutcome> samples);

BusAssessment assess_bus(const Grid& grid, const OperatingPoint& op, int bus, const RideThroughCurve& curve,
                         const AssessOptions& opts, int jobs = 1);

/// One assessment per non-slack bus, in bus order. Samples run in parallel;
/// results do not depend on the number of jobs.
std::vector<BusAssessment> assess_grid(const Grid& grid, const OperatingPoint& op, const RideThroughCurve& curve,
                                       const AssessOptions& opts, int jobs = 1);

struct ResultRow {
  int grid_id = 0;
  BusKind kind = BusKind::PQLoad;
  std::optional<NormalFormLabel> label;
  FrtResult result;
};

/// Columns: grid_id,bus_id,bus_kind,v_star,v_total,p_frt,std_err,
/// n_init_failed,n_integ_failed,nf_label.
void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// One-sided Mann-Whitney U test of H1: values in `a` tend to exceed `b`
/// (normal approximation with tie correction).
struct OrderingTest {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double u = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

OrderingTest mann_whitney_greater(std::span<const double> a, std::span<const double> b);

}  // namespace gridfrt::frt
