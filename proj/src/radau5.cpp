#include "gridfrt/radau5.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace gridfrt::dynamics {

namespace {

struct Tableau {
  double c1 = 0.0;
  double c2 = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  Eigen::Matrix3d t;
  Eigen::Matrix3d t_inv;
  double dd1 = 0.0;
  double dd2 = 0.0;
  double dd3 = 0.0;

  Tableau() {
    const double s6 = std::sqrt(6.0);
    c1 = (4.0 - s6) / 10.0;
    c2 = (4.0 + s6) / 10.0;
    Eigen::Matrix3d a;
    a << (88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0,
        (296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0,
        (16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0;
    const Eigen::Matrix3d a_inv = a.inverse();
    Eigen::EigenSolver<Eigen::Matrix3d> es(a_inv);
    int real_idx = 0;
    int cplx_idx = -1;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(es.eigenvalues()[i].imag()) < 1e-12) real_idx = i;
      else if (es.eigenvalues()[i].imag() > 0.0) cplx_idx = i;
    }
    gamma = es.eigenvalues()[real_idx].real();
    alpha = es.eigenvalues()[cplx_idx].real();
    beta = es.eigenvalues()[cplx_idx].imag();
    Eigen::Vector3d u = es.eigenvectors().col(real_idx).real();
    u /= u(2);
    Eigen::Vector3cd w = es.eigenvectors().col(cplx_idx);
    w /= w(2);
    t.col(0) = u;
    t.col(1) = w.real();
    t.col(2) = -w.imag();
    t_inv = t.inverse();
    dd1 = -(13.0 + 7.0 * s6) / 3.0;
    dd2 = (-13.0 + 7.0 * s6) / 3.0;
    dd3 = -1.0 / 3.0;
  }
};

const Tableau& tableau() {
  static const Tableau tab;
  return tab;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double scaled_rms(const Eigen::VectorXd& v, const Eigen::VectorXd& scal) {
  return std::sqrt((v.array() / scal.array()).square().mean());
}

}  // namespace

void StepPolynomial::eval(double t, Eigen::VectorXd& out) const {
  const auto& tab = tableau();
  // Lagrange basis on nodes 0, c1, c2, 1 in the normalised step time s.
  const double s = (t - t0) / h;
  const double c1 = tab.c1;
  const double c2 = tab.c2;
  const double l0 = (s - c1) * (s - c2) * (s - 1.0) / ((0.0 - c1) * (0.0 - c2) * (0.0 - 1.0));
  const double l1 = s * (s - c2) * (s - 1.0) / (c1 * (c1 - c2) * (c1 - 1.0));
  const double l2 = s * (s - c1) * (s - 1.0) / (c2 * (c2 - c1) * (c2 - 1.0));
  const double l3 = s * (s - c1) * (s - c2) / (1.0 * (1.0 - c1) * (1.0 - c2));
  out = l0 * y0 + l1 * stage1 + l2 * stage2 + l3 * y1;
}

Trajectory::Trajectory(double t0, Eigen::VectorXd y0) : t0_(t0), y_initial_(std::move(y0)) {}

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(steps_.size() + 1);
  out.push_back(t0_);
  for (const auto& s : steps_) out.push_back(s.t1());
  return out;
}

Eigen::VectorXd Trajectory::state_at(double t) const {
  if (t < t0_ || t > t_end()) throw std::out_of_range("time outside trajectory");
  if (steps_.empty()) return y_initial_;
  auto it = std::lower_bound(steps_.begin(), steps_.end(), t,
                             [](const StepPolynomial& s, double value) { return s.t1() < value; });
  if (it == steps_.end()) it = std::prev(steps_.end());
  if (t < it->t0) throw std::out_of_range("time not covered by stored steps");
  if (t == it->t1()) return it->y1;
  Eigen::VectorXd out;
  it->eval(t, out);
  return out;
}

Trajectory radau5_integrate(const SemiExplicitDae& dae, double t0, const Eigen::VectorXd& y_start, double t_end,
                            const Radau5Options& opts, const StepObserver& observer) {
  const auto& tab = tableau();
  const int n = dae.dim();
  if (y_start.size() != n) throw std::invalid_argument("initial state has wrong dimension");
  if (!(t_end > t0)) throw std::invalid_argument("t_end must exceed t0");
  if (!all_finite(y_start)) throw IntegrationFailure("non-finite initial state");

  Trajectory traj(t0, y_start);
  const auto& mask = dae.differential_mask();
  Eigen::VectorXd mass(n);
  for (int i = 0; i < n; ++i) mass(i) = mask[i] ? 1.0 : 0.0;

  // Newton tolerances follow the usual Radau5 transformation of user tolerances.
  constexpr double uround = std::numeric_limits<double>::epsilon();
  const double quot_tol = opts.atol / opts.rtol;
  const double rtol = 0.1 * std::pow(opts.rtol, 2.0 / 3.0);
  const double atol = rtol * quot_tol;
  const double fnewt = std::max(10.0 * uround / rtol, std::min(0.03, std::sqrt(rtol)));
  constexpr int nit = 7;
  constexpr double safe = 0.9;
  constexpr double facl = 5.0;
  constexpr double facr = 1.0 / 8.0;
  constexpr double thet = 0.001;
  constexpr double quot1 = 1.0;
  constexpr double quot2 = 1.2;
  const double h_max = opts.h_max > 0.0 ? opts.h_max : (t_end - t0);

  Eigen::VectorXd y = y_start;
  Eigen::VectorXd f0(n);
  dae.rhs(y, f0);
  traj.stats.rhs_evals++;
  if (!all_finite(f0)) throw IntegrationFailure("non-finite right-hand side at initial state");

  auto make_scal = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd s(n);
    for (int i = 0; i < n; ++i) s(i) = atol + rtol * std::abs(v(i));
    return s;
  };
  Eigen::VectorXd scal = make_scal(y);

  Eigen::MatrixXd jac(n, n);
  Eigen::MatrixXd e1(n, n);
  Eigen::MatrixXcd e2(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu1;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu2;

  Eigen::VectorXd z1 = Eigen::VectorXd::Zero(n), z2 = z1, z3 = z1;
  Eigen::VectorXd w1 = z1, w2 = z1, w3 = z1;
  Eigen::VectorXd fz1(n), fz2(n), fz3(n), tmp(n), ycand(n);
  Eigen::VectorXd rhs1(n);
  Eigen::VectorXcd rhs2(n);

  double t = t0;
  double h = std::min(std::max(opts.h0, 1e-10), t_end - t0);
  double hold = h;
  double faccon = 1.0;
  double theta = 1.0;
  double hacc = 0.0;
  double erracc = 0.0;
  bool first = true;
  bool reject = false;
  bool last = false;
  bool have_prev = false;
  StepPolynomial prev;

  bool need_jac = true;
  bool need_lu = true;
  bool caljac = false;

  auto decompose = [&]() {
    const double fac1 = tab.gamma / h;
    const std::complex<double> fac2(tab.alpha / h, tab.beta / h);
    e1 = -jac;
    e2 = (-jac).cast<std::complex<double>>();
    for (int i = 0; i < n; ++i) {
      e1(i, i) += fac1 * mass(i);
      e2(i, i) += fac2 * mass(i);
    }
    lu1.compute(e1);
    lu2.compute(e2);
    traj.stats.decompositions++;
  };

  while (true) {
    if (traj.stats.steps >= opts.max_steps) throw IntegrationFailure("step budget exhausted");
    if (0.1 * std::abs(h) <= std::abs(t) * uround || h < 1e-14) throw IntegrationFailure("step size collapsed");
    if (need_jac) {
      dae.jacobian(y, jac);
      traj.stats.jacobians++;
      caljac = true;
      need_jac = false;
      need_lu = true;
    }
    if (need_lu) {
      decompose();
      need_lu = false;
    }
    traj.stats.steps++;

    // Starting values from the previous collocation polynomial.
    if (first || !have_prev) {
      z1.setZero();
      z2.setZero();
      z3.setZero();
    } else {
      prev.eval(t + tab.c1 * h, tmp);
      z1 = tmp - y;
      prev.eval(t + tab.c2 * h, tmp);
      z2 = tmp - y;
      prev.eval(t + h, tmp);
      z3 = tmp - y;
    }
    w1 = tab.t_inv(0, 0) * z1 + tab.t_inv(0, 1) * z2 + tab.t_inv(0, 2) * z3;
    w2 = tab.t_inv(1, 0) * z1 + tab.t_inv(1, 1) * z2 + tab.t_inv(1, 2) * z3;
    w3 = tab.t_inv(2, 0) * z1 + tab.t_inv(2, 1) * z2 + tab.t_inv(2, 2) * z3;

    // Simplified Newton iteration.
    const double fac1 = tab.gamma / h;
    const double alphn = tab.alpha / h;
    const double betan = tab.beta / h;
    faccon = std::pow(std::max(faccon, uround), 0.8);
    theta = std::abs(thet);
    double dynold = 0.0;
    double thqold = 0.0;
    int newt = 0;
    bool newton_ok = false;
    bool shrink_only = false;  // retry with smaller h, keep the Jacobian
    double shrink_factor = 0.5;
    while (true) {
      if (newt >= nit) break;
      ycand = y + z1;
      dae.rhs(ycand, fz1);
      ycand = y + z2;
      dae.rhs(ycand, fz2);
      ycand = y + z3;
      dae.rhs(ycand, fz3);
      traj.stats.rhs_evals += 3;
      if (!all_finite(fz1) || !all_finite(fz2) || !all_finite(fz3)) break;
      const Eigen::VectorXd g1 = tab.t_inv(0, 0) * fz1 + tab.t_inv(0, 1) * fz2 + tab.t_inv(0, 2) * fz3;
      const Eigen::VectorXd g2 = tab.t_inv(1, 0) * fz1 + tab.t_inv(1, 1) * fz2 + tab.t_inv(1, 2) * fz3;
      const Eigen::VectorXd g3 = tab.t_inv(2, 0) * fz1 + tab.t_inv(2, 1) * fz2 + tab.t_inv(2, 2) * fz3;
      rhs1 = g1 - fac1 * mass.cwiseProduct(w1);
      const Eigen::VectorXd r2 = g2 - alphn * mass.cwiseProduct(w2) + betan * mass.cwiseProduct(w3);
      const Eigen::VectorXd r3 = g3 - betan * mass.cwiseProduct(w2) - alphn * mass.cwiseProduct(w3);
      for (int i = 0; i < n; ++i) rhs2(i) = std::complex<double>(r2(i), r3(i));
      const Eigen::VectorXd dw1 = lu1.solve(rhs1);
      const Eigen::VectorXcd dw23 = lu2.solve(rhs2);
      const Eigen::VectorXd dw2 = dw23.real();
      const Eigen::VectorXd dw3 = dw23.imag();
      if (!all_finite(dw1) || !all_finite(dw2) || !all_finite(dw3)) break;
      const double dyno = std::sqrt(((dw1.array() / scal.array()).square().sum() +
                                     (dw2.array() / scal.array()).square().sum() +
                                     (dw3.array() / scal.array()).square().sum()) /
                                    (3.0 * n));
      if (newt >= 1) {
        const double thq = dyno / dynold;
        theta = newt == 1 ? thq : std::sqrt(thq * thqold);
        thqold = thq;
        if (theta < 0.99) {
          faccon = theta / (1.0 - theta);
          const double dyth = faccon * dyno * std::pow(theta, nit - 1 - newt) / fnewt;
          if (dyth >= 1.0) {
            const double qnewt = std::max(1e-4, std::min(20.0, dyth));
            shrink_factor = 0.8 * std::pow(qnewt, -1.0 / (4.0 + nit - 1 - newt));
            shrink_only = true;
            break;
          }
        } else {
          break;
        }
      }
      dynold = std::max(dyno, uround);
      w1 += dw1;
      w2 += dw2;
      w3 += dw3;
      z1 = tab.t(0, 0) * w1 + tab.t(0, 1) * w2 + tab.t(0, 2) * w3;
      z2 = tab.t(1, 0) * w1 + tab.t(1, 1) * w2 + tab.t(1, 2) * w3;
      z3 = tab.t(2, 0) * w1 + tab.t(2, 1) * w2 + tab.t(2, 2) * w3;
      ++newt;
      if (faccon * dyno <= fnewt) {
        newton_ok = true;
        break;
      }
    }

    if (!newton_ok) {
      traj.stats.rejected++;
      reject = true;
      last = false;
      h *= shrink_only ? shrink_factor : 0.5;
      if (shrink_only || caljac) need_lu = true;
      else need_jac = true;
      continue;
    }

    // Error estimate.
    const double hee1 = tab.dd1 / h;
    const double hee2 = tab.dd2 / h;
    const double hee3 = tab.dd3 / h;
    const Eigen::VectorXd f2 = hee1 * z1 + hee2 * z2 + hee3 * z3;
    const Eigen::VectorXd mf2 = mass.cwiseProduct(f2);
    Eigen::VectorXd cont = lu1.solve(Eigen::VectorXd(mf2 + f0));
    double err = scaled_rms(cont, scal);
    if (err >= 1.0 && (first || reject)) {
      ycand = y + cont;
      dae.rhs(ycand, tmp);
      traj.stats.rhs_evals++;
      if (all_finite(tmp)) {
        cont = lu1.solve(Eigen::VectorXd(tmp + mf2));
        err = scaled_rms(cont, scal);
      }
    }
    if (!std::isfinite(err)) err = 1e10;
    err = std::max(err, 1e-10);

    const double fac = std::min(safe, safe * (1.0 + 2.0 * nit) / (newt + 2.0 * nit));
    double quot = std::max(facr, std::min(facl, std::pow(err, 0.25) / fac));
    double hnew = h / quot;

    if (err < 1.0) {
      // Accepted.
      first = false;
      traj.stats.accepted++;
      if (traj.stats.accepted > 1) {
        double facgus = (hacc / h) * std::pow(err * err / erracc, 0.25) / safe;
        facgus = std::max(facr, std::min(facl, facgus));
        quot = std::max(quot, facgus);
        hnew = h / quot;
      }
      hacc = h;
      erracc = std::max(1e-2, err);

      StepPolynomial step;
      step.t0 = t;
      step.h = h;
      step.y0 = y;
      step.stage1 = y + z1;
      step.stage2 = y + z2;
      step.y1 = y + z3;
      if (!all_finite(step.y1)) throw IntegrationFailure("non-finite state");

      y = step.y1;
      t = step.t1();
      hold = h;
      dae.rhs(y, f0);
      traj.stats.rhs_evals++;
      if (!all_finite(f0)) throw IntegrationFailure("non-finite right-hand side");
      scal = make_scal(y);

      const bool keep_going = observer ? observer(step) : true;
      prev = step;
      have_prev = true;
      if (opts.store_steps) traj.push(std::move(step));
      else {
        traj.push(std::move(step));
        traj.keep_only_last();
      }
      if (!keep_going) {
        traj.stopped_early = true;
        break;
      }
      if (last || t >= t_end) break;

      hnew = std::min(hnew, h_max);
      if (reject) hnew = std::min(hnew, h);
      reject = false;
      caljac = false;
      if (t + hnew >= t_end || t + hnew > t_end - 1e-12 * std::abs(t_end)) {
        hnew = t_end - t;
        last = true;
      }
      const double qt = hnew / h;
      if (theta <= thet && qt >= quot1 && qt <= quot2 && !last) {
        // Keep h, Jacobian and factorisations.
        continue;
      }
      h = hnew;
      if (theta <= thet) need_lu = true;
      else need_jac = true;
    } else {
      traj.stats.rejected++;
      reject = true;
      last = false;
      h = first ? h * 0.1 : hnew;
      if (caljac) need_lu = true;
      else need_jac = true;
    }
  }
  (void)hold;
  return traj;
}

}  // namespace gridfrt::dynamics
