#pragma once

// Grid data model: per-unit bases, pi-model lines, typed buses and the bus
// admittance matrix. Everything downstream of grid construction is in p.u.

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gridfrt {

using Complex = std::complex<double>;

/// Raised for malformed grids, lines and bases.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical procedure (load flow, integration, projection)
/// does not produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PerUnitBase {
  double v_base_kv = 380.0;
  double s_base_mw = 100.0;
  double f_nominal_hz = 50.0;

  [[nodiscard]] double z_base_ohm() const { return v_base_kv * v_base_kv / s_base_mw; }
  void validate() const;
};

/// Physical line description. Capacitance is in nF/km.
struct LineParams {
  double r_per_km = 0.025;
  double x_per_km = 0.25;
  double c_sh_per_km = 13.7;
  double length_km = 1.0;

  void validate() const;
};

/// Standard 380 kV overhead line type (per-km values; length is a placeholder).
inline constexpr LineParams kOverhead380kV{0.025, 0.25, 13.7, 1.0};

struct LineAdmittance {
  Complex y_series;  // p.u.
  Complex y_shunt;   // p.u., total; half is attached at each terminal
};

/// Series and total shunt admittance of a pi-model line in p.u.
LineAdmittance line_admittance(const LineParams& params, const PerUnitBase& base);

struct Line {
  int from = 0;
  int to = 0;
  LineParams params;
  Complex y_series;
  Complex y_shunt;
};

Line make_line(int from, int to, const LineParams& params, const PerUnitBase& base);

enum class NormalFormLabel { NF1, NF2, NF3, Custom };

std::string_view to_string(NormalFormLabel label);
NormalFormLabel normal_form_label_from_string(std::string_view s);

/// Coefficients of the normal-form grid-forming model
///
///   dω/dt   = b_ω δω + c_ω δν + g_ω δP + h_ω δQ
///   dv/dt/v = b_v δω + c_v δν + g_v δP + h_v δQ
///
/// with δν = |v|² - v_set², δP = P - P_set, δQ = Q - Q_set. The frequency row
/// is real, the voltage row complex; b_v = j makes the phase advance by δω.
struct NormalFormParams {
  NormalFormLabel label = NormalFormLabel::Custom;
  double b_omega = 0.0;
  double c_omega = 0.0;
  double g_omega = 0.0;
  double h_omega = 0.0;
  Complex b_v{0.0, 1.0};
  Complex c_v{0.0, 0.0};
  Complex g_v{0.0, 0.0};
  Complex h_v{0.0, 0.0};

  /// Real part of the frequency damping coefficient, the ML feature for NF buses.
  [[nodiscard]] double re_bx() const { return b_omega; }

  /// Droop-like preset built from the real parts of B_x and G_x:
  /// b_ω = Re(B), g_ω = Re(G), c_v = Re(B), h_v = Re(G)/5, other cross terms 0.
  static NormalFormParams from_real_parts(double re_b, double re_g,
                                          NormalFormLabel label = NormalFormLabel::Custom);
  /// NF1 (-1, -5), NF2 (-2, -10), NF3 (-0.2, -1). Only the real parts of B_x and
  /// G_x are published; the remaining coefficients are the provisional mapping above.
  static NormalFormParams preset(NormalFormLabel label);
};

enum class BusKind { NormalForm, PQLoad, Slack };

std::string_view to_string(BusKind kind);
BusKind bus_kind_from_string(std::string_view s);

struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQLoad;
  std::optional<NormalFormParams> params;  // present iff kind == NormalForm
  double p_set = 0.0;                      // injection, p.u.
  double q_set = 0.0;
  double v_set = 1.0;
  std::optional<std::pair<double, double>> position;  // topology coordinates, unit square
};

struct Grid {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  PerUnitBase base;

  [[nodiscard]] int size() const { return static_cast<int>(buses.size()); }
  /// Index of the first Slack bus, or -1.
  [[nodiscard]] int slack_index() const;
  /// Neighbour lists (one entry per line, parallel lines repeat).
  [[nodiscard]] std::vector<std::vector<int>> adjacency() const;
};

/// Steady state of a grid: polar voltage and net injection per bus.
struct BusOperatingPoint {
  double v = 1.0;
  double theta = 0.0;
  double p = 0.0;
  double q = 0.0;
};

struct OperatingPoint {
  std::vector<BusOperatingPoint> buses;

  [[nodiscard]] Complex voltage(int bus) const { return std::polar(buses[bus].v, buses[bus].theta); }
  [[nodiscard]] std::vector<Complex> voltages() const;
};

/// Y[k][k] = Σ (y_series + y_shunt/2) over incident lines, Y[k][m] = -Σ y_series(k,m).
Eigen::MatrixXcd admittance_matrix(const Grid& grid);

/// All violated grid invariants (empty when the grid is valid).
std::vector<std::string> validate_grid(const Grid& grid);

/// Throws GridError listing every violation.
void require_valid(const Grid& grid);

/// True when the undirected graph on n nodes is connected (n <= 1 counts as connected).
bool is_connected(int n, const std::vector<std::pair<int, int>>& edges);

}  // namespace gridfrt
