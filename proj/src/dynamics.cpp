#include "gridfrt/dynamics.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/LU>

#include "gridfrt/format.hpp"

namespace gridfrt::dynamics {

namespace {

struct NormalFormTerms {
  double omega_dot;
  Complex rate;
};

NormalFormTerms normal_form_terms(const NormalFormParams& nf, Complex v, double delta_omega, Complex s,
                                  const Bus& bus) {
  const double dnu = std::norm(v) - bus.v_set * bus.v_set;
  const double dp = s.real() - bus.p_set;
  const double dq = s.imag() - bus.q_set;
  return {nf.b_omega * delta_omega + nf.c_omega * dnu + nf.g_omega * dp + nf.h_omega * dq,
          nf.b_v * delta_omega + nf.c_v * dnu + nf.g_v * dp + nf.h_v * dq};
}

}  // namespace

NormalFormRates normal_form_rhs(const NormalFormParams& params, Complex v, double delta_omega, double p, double q,
                                double v_set, double p_set, double q_set) {
  if (std::abs(v) < kSingularVoltage) throw NumericalError("singular voltage at normal-form bus");
  Bus bus;
  bus.v_set = v_set;
  bus.p_set = p_set;
  bus.q_set = q_set;
  const auto terms = normal_form_terms(params, v, delta_omega, Complex{p, q}, bus);
  return {terms.omega_dot, terms.rate};
}

std::vector<Complex> network_power(const Eigen::MatrixXcd& y_bus, std::span<const Complex> voltages) {
  const auto n = static_cast<Eigen::Index>(voltages.size());
  if (y_bus.rows() != n || y_bus.cols() != n) throw std::invalid_argument("admittance/voltage size mismatch");
  const Eigen::Map<const Eigen::VectorXcd> v(voltages.data(), n);
  const Eigen::VectorXcd current = y_bus * v;
  std::vector<Complex> s(voltages.size());
  for (Eigen::Index i = 0; i < n; ++i) s[i] = v(i) * std::conj(current(i));
  return s;
}

GridDae::GridDae(Grid grid, std::optional<Complex> slack_voltage) : grid_(std::move(grid)) {
  require_valid(grid_);
  y_bus_ = admittance_matrix(grid_);
  const int slack = grid_.slack_index();
  slack_voltage_ = slack_voltage.value_or(Complex{grid_.buses[slack].v_set, 0.0});
  v_offset_.resize(grid_.size());
  w_offset_.assign(grid_.size(), -1);
  for (const auto& b : grid_.buses) {
    v_offset_[b.id] = dim_;
    const bool nf = b.kind == BusKind::NormalForm;
    mask_.push_back(nf ? 1 : 0);
    mask_.push_back(nf ? 1 : 0);
    dim_ += 2;
    if (nf) {
      w_offset_[b.id] = dim_;
      mask_.push_back(1);
      dim_ += 1;
    }
  }
}

std::vector<int> GridDae::algebraic_indices() const {
  std::vector<int> out;
  for (int i = 0; i < dim_; ++i) {
    if (!mask_[i]) out.push_back(i);
  }
  return out;
}

std::vector<int> GridDae::differential_indices() const {
  std::vector<int> out;
  for (int i = 0; i < dim_; ++i) {
    if (mask_[i]) out.push_back(i);
  }
  return out;
}

std::vector<Complex> GridDae::voltages(const Eigen::VectorXd& y) const {
  std::vector<Complex> v(grid_.buses.size());
  for (int i = 0; i < grid_.size(); ++i) v[i] = voltage(y, i);
  return v;
}

Eigen::VectorXd GridDae::state_from_operating_point(const OperatingPoint& op) const {
  if (static_cast<int>(op.buses.size()) != grid_.size()) throw std::invalid_argument("operating point size mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < grid_.size(); ++i) set_voltage(y, i, op.voltage(i));
  return y;
}

void GridDae::rhs(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
  const int n = grid_.size();
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = voltage(y, i);
  const Eigen::VectorXcd current = y_bus_ * v;
  out.resize(dim_);
  for (const auto& b : grid_.buses) {
    const int m = b.id;
    const int o = v_offset_[m];
    const Complex s = v(m) * std::conj(current(m));
    switch (b.kind) {
      case BusKind::NormalForm: {
        if (std::abs(v(m)) < kSingularVoltage) throw IntegrationFailure("singular voltage at normal-form bus");
        const auto terms = normal_form_terms(*b.params, v(m), y(w_offset_[m]), s, b);
        const Complex vdot = v(m) * terms.rate;
        out(o) = vdot.real();
        out(o + 1) = vdot.imag();
        out(w_offset_[m]) = terms.omega_dot;
        break;
      }
      case BusKind::PQLoad: {
        const Complex mismatch = s - Complex{b.p_set, b.q_set};
        out(o) = -mismatch.real();
        out(o + 1) = -mismatch.imag();
        break;
      }
      case BusKind::Slack: {
        const Complex d = v(m) - slack_voltage_;
        out(o) = -d.real();
        out(o + 1) = -d.imag();
        break;
      }
    }
  }
}

void GridDae::jacobian(const Eigen::VectorXd& y, Eigen::MatrixXd& out) const {
  const int n = grid_.size();
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = voltage(y, i);
  const Eigen::VectorXcd current = y_bus_ * v;
  out.setZero(dim_, dim_);
  const Complex j1{0.0, 1.0};

  for (const auto& b : grid_.buses) {
    const int m = b.id;
    const int row = v_offset_[m];
    if (b.kind == BusKind::Slack) {
      out(row, row) = -1.0;
      out(row + 1, row + 1) = -1.0;
      continue;
    }
    const Complex conj_i = std::conj(current(m));
    const Complex s = v(m) * conj_i;
    NormalFormTerms terms{};
    if (b.kind == BusKind::NormalForm) terms = normal_form_terms(*b.params, v(m), y(w_offset_[m]), s, b);

    for (int k = 0; k < n; ++k) {
      const Complex ymk = y_bus_(m, k);
      if (k != m && ymk == Complex{}) continue;
      Complex ds_de = v(m) * std::conj(ymk);
      Complex ds_df = -j1 * v(m) * std::conj(ymk);
      if (k == m) {
        ds_de += conj_i;
        ds_df += j1 * conj_i;
      }
      const int col = v_offset_[k];
      if (b.kind == BusKind::PQLoad) {
        out(row, col) = -ds_de.real();
        out(row, col + 1) = -ds_df.real();
        out(row + 1, col) = -ds_de.imag();
        out(row + 1, col + 1) = -ds_df.imag();
        continue;
      }
      // Normal form rows.
      const NormalFormParams& nf = *b.params;
      double dnu_de = 0.0;
      double dnu_df = 0.0;
      if (k == m) {
        dnu_de = 2.0 * v(m).real();
        dnu_df = 2.0 * v(m).imag();
      }
      const int wrow = w_offset_[m];
      out(wrow, col) = nf.c_omega * dnu_de + nf.g_omega * ds_de.real() + nf.h_omega * ds_de.imag();
      out(wrow, col + 1) = nf.c_omega * dnu_df + nf.g_omega * ds_df.real() + nf.h_omega * ds_df.imag();
      const Complex dr_de = nf.c_v * dnu_de + nf.g_v * ds_de.real() + nf.h_v * ds_de.imag();
      const Complex dr_df = nf.c_v * dnu_df + nf.g_v * ds_df.real() + nf.h_v * ds_df.imag();
      Complex dvdot_de = v(m) * dr_de;
      Complex dvdot_df = v(m) * dr_df;
      if (k == m) {
        dvdot_de += terms.rate;
        dvdot_df += j1 * terms.rate;
      }
      out(row, col) = dvdot_de.real();
      out(row + 1, col) = dvdot_de.imag();
      out(row, col + 1) = dvdot_df.real();
      out(row + 1, col + 1) = dvdot_df.imag();
    }
    if (b.kind == BusKind::NormalForm) {
      const int wrow = w_offset_[m];
      const NormalFormParams& nf = *b.params;
      out(wrow, wrow) = nf.b_omega;
      const Complex dvdot_dw = v(m) * nf.b_v;
      out(row, wrow) = dvdot_dw.real();
      out(row + 1, wrow) = dvdot_dw.imag();
    }
  }
}

Eigen::VectorXd GridDae::residual(const Eigen::VectorXd& y, const Eigen::VectorXd& ydot) const {
  if (y.size() != dim_ || ydot.size() != dim_) throw std::invalid_argument("residual: dimension mismatch");
  Eigen::VectorXd f;
  rhs(y, f);
  Eigen::VectorXd r(dim_);
  for (int i = 0; i < dim_; ++i) r(i) = (mask_[i] ? ydot(i) : 0.0) - f(i);
  return r;
}

double GridDae::algebraic_residual(const Eigen::VectorXd& y) const {
  Eigen::VectorXd f;
  rhs(y, f);
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i) {
    if (!mask_[i]) worst = std::max(worst, std::abs(f(i)));
  }
  return worst;
}

Trajectory integrate(const GridDae& dae, const Eigen::VectorXd& y0, double t_end, const IntegrateOptions& opts,
                     const StepObserver& observer) {
  const double alg = dae.algebraic_residual(y0);
  if (!(alg < 1e-8)) throw IntegrationFailure("inconsistent initial state");
  Radau5Options ro;
  ro.rtol = opts.rtol;
  ro.atol = opts.atol;
  ro.h0 = opts.h0;
  ro.store_steps = opts.store_steps;
  return radau5_integrate(dae, 0.0, y0, t_end, ro, observer);
}

Eigen::MatrixXd finite_difference_jacobian(const SemiExplicitDae& dae, const Eigen::VectorXd& y, double step) {
  const int n = dae.dim();
  Eigen::MatrixXd jac(n, n);
  Eigen::VectorXd fp(n), fm(n);
  for (int i = 0; i < n; ++i) {
    const double h = step * std::max(1.0, std::abs(y(i)));
    Eigen::VectorXd yp = y, ym = y;
    yp(i) += h;
    ym(i) -= h;
    dae.rhs(yp, fp);
    dae.rhs(ym, fm);
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd reduced_state_matrix(const Eigen::MatrixXd& jacobian, const std::vector<char>& differential_mask) {
  std::vector<int> xs, zs;
  for (int i = 0; i < static_cast<int>(differential_mask.size()); ++i) {
    (differential_mask[i] ? xs : zs).push_back(i);
  }
  const auto nx = static_cast<Eigen::Index>(xs.size());
  const auto nz = static_cast<Eigen::Index>(zs.size());
  Eigen::MatrixXd jxx(nx, nx), jxz(nx, nz), jzx(nz, nx), jzz(nz, nz);
  for (Eigen::Index a = 0; a < nx; ++a) {
    for (Eigen::Index b = 0; b < nx; ++b) jxx(a, b) = jacobian(xs[a], xs[b]);
    for (Eigen::Index b = 0; b < nz; ++b) jxz(a, b) = jacobian(xs[a], zs[b]);
  }
  for (Eigen::Index a = 0; a < nz; ++a) {
    for (Eigen::Index b = 0; b < nx; ++b) jzx(a, b) = jacobian(zs[a], xs[b]);
    for (Eigen::Index b = 0; b < nz; ++b) jzz(a, b) = jacobian(zs[a], zs[b]);
  }
  if (nz == 0) return jxx;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jzz);
  if (!lu.isInvertible()) throw NumericalError("index problem: singular algebraic block");
  return jxx - jxz * lu.solve(jzx);
}

void write_trajectory_csv(const std::filesystem::path& path, const GridDae& dae, const Trajectory& traj,
                          std::span<const double> times) {
  std::string text = "t,bus_id,v_abs,theta,delta_omega\n";
  for (double t : times) {
    const Eigen::VectorXd y = traj.state_at(t);
    for (int b = 0; b < dae.grid().size(); ++b) {
      const Complex v = dae.voltage(y, b);
      text += fmt_num(t) + "," + std::to_string(b) + "," + fmt_num(std::abs(v)) + "," + fmt_num(std::arg(v)) + "," +
              fmt_num(dae.omega(y, b)) + "\n";
    }
  }
  std::filesystem::create_directories(path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw GridError("cannot write " + path.string());
  out << text;
}

}  // namespace gridfrt::dynamics
