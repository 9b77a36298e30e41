#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "gridfrt/dynamics.hpp"
#include "gridfrt/synthesis.hpp"

namespace gridfrt::synthesis {

LoadFlowResult newton_load_flow(const Grid& grid, const LoadFlowOptions& opts) {
  require_valid(grid);
  const int n = grid.size();
  const Eigen::MatrixXcd ybus = admittance_matrix(grid);

  std::vector<int> non_slack;  // angle unknowns
  std::vector<int> pq;         // magnitude unknowns
  for (const auto& b : grid.buses) {
    if (b.kind != BusKind::Slack) non_slack.push_back(b.id);
    if (b.kind == BusKind::PQLoad) pq.push_back(b.id);
  }
  const int na = static_cast<int>(non_slack.size());
  const int nm = static_cast<int>(pq.size());

  Eigen::VectorXd vm(n), va = Eigen::VectorXd::Zero(n);
  for (const auto& b : grid.buses) vm(b.id) = b.kind == BusKind::PQLoad ? 1.0 : b.v_set;

  auto complex_voltage = [&]() {
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
    return v;
  };

  auto mismatch = [&](const Eigen::VectorXcd& v, Eigen::VectorXd& f) {
    const Eigen::VectorXcd current = ybus * v;
    f.resize(na + nm);
    for (int a = 0; a < na; ++a) {
      const int i = non_slack[a];
      f(a) = (v(i) * std::conj(current(i))).real() - grid.buses[i].p_set;
    }
    for (int a = 0; a < nm; ++a) {
      const int i = pq[a];
      f(na + a) = (v(i) * std::conj(current(i))).imag() - grid.buses[i].q_set;
    }
  };

  LoadFlowResult result;
  Eigen::VectorXcd v = complex_voltage();
  Eigen::VectorXd f;
  mismatch(v, f);
  double norm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  int iter = 0;
  const Complex j1{0.0, 1.0};
  while (norm >= opts.tol) {
    if (iter >= opts.max_iterations || !std::isfinite(norm)) {
      throw InfeasibleDispatch("load flow did not converge (mismatch " + std::to_string(norm) + ")");
    }
    // dS/dθ = j diag(V) conj(diag(I) - Y diag(V)); dS/d|V| = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    const Eigen::VectorXcd current = ybus * v;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(na + nm, na + nm);
    auto ds_dva = [&](int i, int k) {
      Complex val = -v(i) * std::conj(ybus(i, k) * v(k));
      if (i == k) val += v(i) * std::conj(current(i));
      return j1 * val;
    };
    auto ds_dvm = [&](int i, int k) {
      const Complex uk = v(k) / std::abs(v(k));
      Complex val = v(i) * std::conj(ybus(i, k) * uk);
      if (i == k) val += std::conj(current(i)) * uk;
      return val;
    };
    for (int a = 0; a < na; ++a) {
      const int i = non_slack[a];
      for (int b = 0; b < na; ++b) jac(a, b) = ds_dva(i, non_slack[b]).real();
      for (int b = 0; b < nm; ++b) jac(a, na + b) = ds_dvm(i, pq[b]).real();
    }
    for (int a = 0; a < nm; ++a) {
      const int i = pq[a];
      for (int b = 0; b < na; ++b) jac(na + a, b) = ds_dva(i, non_slack[b]).imag();
      for (int b = 0; b < nm; ++b) jac(na + a, na + b) = ds_dvm(i, pq[b]).imag();
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const Eigen::VectorXd dx = lu.solve(-f);
    if (!dx.allFinite()) throw InfeasibleDispatch("load flow Jacobian is singular");
    for (int a = 0; a < na; ++a) va(non_slack[a]) += dx(a);
    for (int a = 0; a < nm; ++a) vm(pq[a]) += dx(na + a);
    v = complex_voltage();
    mismatch(v, f);
    norm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    ++iter;
  }
  for (int i = 0; i < n; ++i) {
    if (!(vm(i) > 0.0)) throw InfeasibleDispatch("load flow converged to a non-physical voltage");
  }

  std::vector<Complex> vv(v.data(), v.data() + n);
  const auto s = dynamics::network_power(ybus, vv);
  result.op.buses.resize(n);
  for (int i = 0; i < n; ++i) result.op.buses[i] = {vm(i), va(i), s[i].real(), s[i].imag()};
  result.residual = norm;
  result.iterations = iter;
  return result;
}

Grid apply_dispatch(Grid grid, const OperatingPoint& op) {
  for (auto& b : grid.buses) {
    if (b.kind == BusKind::NormalForm) b.q_set = op.buses[b.id].q;
    if (b.kind == BusKind::Slack) {
      b.p_set = op.buses[b.id].p;
      b.q_set = op.buses[b.id].q;
    }
  }
  return grid;
}

}  // namespace gridfrt::synthesis
