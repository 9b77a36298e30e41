#include "gridfrt/perturb.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <Eigen/QR>

#include "gridfrt/format.hpp"

namespace gridfrt::perturb {

namespace {

void check_target(const Grid& grid, int target_bus) {
  if (target_bus < 0 || target_bus >= grid.size()) {
    throw GridError("target bus " + std::to_string(target_bus) + " does not exist");
  }
  if (grid.buses[target_bus].kind == BusKind::Slack) throw GridError("the slack bus cannot be a perturbation target");
}

}  // namespace

int sample_dimension(const Grid& grid, int target_bus) {
  check_target(grid, target_bus);
  return grid.buses[target_bus].kind == BusKind::NormalForm ? 3 : 2;
}

PerturbationSpec spec_from_unit_point(int target_bus, std::span<const double> u) {
  if (u.size() < 2) throw std::invalid_argument("perturbation needs at least two coordinates");
  PerturbationSpec s;
  s.target_bus = target_bus;
  s.v_mag = u[0];
  s.v_angle = 2.0 * std::numbers::pi * u[1];
  s.freq_offset = u.size() >= 3 ? 2.0 * u[2] - 1.0 : 0.0;
  return s;
}

PerturbationSpec make_perturbation(SobolSampler& sampler, const Grid& grid, int target_bus) {
  const int dim = sample_dimension(grid, target_bus);
  if (sampler.dimension() != dim) {
    throw std::invalid_argument("sampler dimension " + std::to_string(sampler.dimension()) + " does not match bus (" +
                                std::to_string(dim) + ")");
  }
  const auto u = sampler.next();
  return spec_from_unit_point(target_bus, u);
}

PerturbationSpec perturbation_at(const Grid& grid, int target_bus, std::uint64_t sample_index) {
  const SobolSampler sampler(sample_dimension(grid, target_bus));
  const auto u = sampler.point(sample_index + 1);
  return spec_from_unit_point(target_bus, u);
}

PostClearanceState consistent_init(const dynamics::GridDae& dae, const OperatingPoint& op,
                                   const PerturbationSpec& spec, const ProjectionOptions& opts) {
  const Grid& grid = dae.grid();
  check_target(grid, spec.target_bus);
  const BusKind target_kind = grid.buses[spec.target_bus].kind;

  PostClearanceState out;
  out.spec = spec;
  Eigen::VectorXd y = dae.state_from_operating_point(op);
  dae.set_voltage(y, spec.target_bus, spec.voltage());
  if (target_kind == BusKind::NormalForm) y(dae.omega_offset(spec.target_bus)) = 2.0 * std::numbers::pi * spec.freq_offset;

  std::vector<int> rows;
  std::vector<int> cols;
  for (const auto& b : grid.buses) {
    const int off = dae.voltage_offset(b.id);
    if (b.kind == BusKind::PQLoad) {
      rows.insert(rows.end(), {off, off + 1});
      if (b.id != spec.target_bus) cols.insert(cols.end(), {off, off + 1});
    } else if (b.kind == BusKind::NormalForm && target_kind == BusKind::PQLoad) {
      cols.insert(cols.end(), {off, off + 1});
    }
  }
  const int nr = static_cast<int>(rows.size());
  const int nc = static_cast<int>(cols.size());

  Eigen::VectorXd f(dae.dim());
  auto residual_of = [&](const Eigen::VectorXd& state, Eigen::VectorXd& r) {
    dae.rhs(state, f);
    r.resize(nr);
    for (int i = 0; i < nr; ++i) r(i) = f(rows[i]);
    return r.allFinite();
  };

  Eigen::VectorXd r;
  residual_of(y, r);
  Eigen::MatrixXd jac;
  Eigen::MatrixXd sub(nr, nc);
  Eigen::VectorXd trial_r;
  int iter = 0;
  while (nr > 0 && r.lpNorm<Eigen::Infinity>() >= opts.tol) {
    if (iter >= opts.max_iterations) throw NoConsistentState("projection did not converge");
    if (nc == 0) throw NoConsistentState("no free algebraic variables");
    dae.jacobian(y, jac);
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < nc; ++j) sub(i, j) = jac(rows[i], cols[j]);
    }
    const Eigen::VectorXd dz = -sub.completeOrthogonalDecomposition().solve(r);
    if (!dz.allFinite()) throw NoConsistentState("singular projection Jacobian");

    const double norm0 = r.norm();
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt, lambda *= 0.5) {
      Eigen::VectorXd trial = y;
      for (int j = 0; j < nc; ++j) trial(cols[j]) += lambda * dz(j);
      try {
        if (!residual_of(trial, trial_r)) continue;
      } catch (const dynamics::IntegrationFailure&) {
        continue;  // trial hit a singular normal-form voltage
      }
      if (trial_r.norm() <= (1.0 - 1e-4 * lambda) * norm0) {
        y = std::move(trial);
        r = trial_r;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NoConsistentState("line search failed");
    ++iter;
  }

  out.y = std::move(y);
  out.residual = nr > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0;
  out.iterations = iter;
  const auto s = dynamics::network_power(dae.admittance(), dae.voltages(out.y));
  for (int b = 0; b < grid.size(); ++b) {
    out.delta_p += s[b].real() - op.buses[b].p;
    out.delta_q += s[b].imag() - op.buses[b].q;
  }
  return out;
}

void write_sample_log(const std::filesystem::path& path, std::span<const SampleLogRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "grid_id,bus_id,sample_idx,v_mag,v_angle,freq_offset,init_ok\n";
  for (const auto& row : rows) {
    os << row.grid_id << ',' << row.bus_id << ',' << row.sample_idx << ',' << fmt_num(row.spec.v_mag) << ','
       << fmt_num(row.spec.v_angle) << ',' << fmt_num(row.spec.freq_offset) << ',' << (row.init_ok ? 1 : 0) << '\n';
  }
}

}  // namespace gridfrt::perturb
