#include "llgfem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace llgfem {

Vec3 macrospin_reference(double alpha, const Vec3& H, const Vec3& m0,
                         double t) {
  const double Hn = H.norm();
  if (Hn == 0.0) return m0;

  // Work in the frame with the field along z.
  Eigen::Matrix3d R;
  const double c = H[2] / Hn;
  if (c > 1.0 - 1e-14) {
    R.setIdentity();
  } else if (c < -1.0 + 1e-14) {
    R = Eigen::AngleAxisd(M_PI, Vec3::UnitX()).toRotationMatrix();
  } else {
    const Vec3 axis = Vec3::UnitZ().cross(H / Hn).normalized();
    R = Eigen::AngleAxisd(std::acos(c), axis).toRotationMatrix();
  }

  const Vec3 m0p = R.transpose() * m0;
  const double denom = 1.0 + alpha * alpha;
  // Polar part relaxes along a tanh profile, azimuth precesses uniformly.
  const double w =
      alpha * Hn * t / denom + std::atanh(std::clamp(m0p[2], -1.0, 1.0));
  const double z = std::tanh(w);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = std::atan2(m0p[1], m0p[0]) + Hn * t / denom;
  return R * Vec3(s * std::cos(phi), s * std::sin(phi), z);
}

RenormalizationReport renormalization_energy_test(const Mesh& mesh, int trials,
                                                  std::uint64_t seed) {
  RenormalizationReport rep;
  rep.applicable = audit_mesh(mesh).satisfies_condition;
  if (!rep.applicable) return rep;

  const StiffnessOperator stiff = assemble_stiffness(mesh);
  const auto dirichlet = [&](const NodalField& u) {
    return (u.array() * stiff.apply(u).array()).sum();
  };

  std::mt19937_64 gen(seed);
  rep.trials = trials;
  for (int k = 0; k < trials; ++k) {
    NodalField u = random_shell_field(mesh.num_vertices(), gen(), 1.0, 3.0);
    const double before = dirichlet(u);
    u.rowwise().normalize();
    const double after = dirichlet(u);
    const double excess = (after - before) / std::max(before, 1e-300);
    rep.worst_excess = std::max(rep.worst_excess, excess);
    if (excess <= 1e-12) ++rep.passes;
  }
  return rep;
}

double ConvergenceTable::min_order() const {
  double mo = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k < rows.size(); ++k) mo = std::min(mo, rows[k].order);
  return rows.size() > 1 ? mo : 0.0;
}

ConvergenceTable convergence_study(const FieldEvaluator& fields,
                                   const SchemeConfig& base,
                                   const NodalField& m0,
                                   const std::vector<double>& taus,
                                   bool analytic_macrospin) {
  if (taus.size() < 3)
    throw Error("convergence study needs at least 3 step sizes");
  for (size_t k = 1; k < taus.size(); ++k)
    if (!(taus[k] <= taus[k - 1] && taus[k] > 0.0))
      throw Error("step sizes must be positive and non-increasing");

  RunOptions opts;
  opts.store_states = true;

  std::vector<NodalField> finals;
  finals.reserve(taus.size());
  SchemeConfig cfg = base;
  for (double tau : taus) {
    cfg.tau = tau;
    finals.push_back(run(fields, cfg, m0, opts).final_state());
  }

  NodalField ref;
  if (analytic_macrospin) {
    const MaterialParams& mat = fields.material();
    ref.resize(m0.rows(), 3);
    for (Eigen::Index i = 0; i < m0.rows(); ++i)
      ref.row(i) = macrospin_reference(mat.alpha, mat.H_ext,
                                       m0.row(i).transpose(), base.T_final)
                       .transpose();
  } else {
    cfg.tau = taus.back() / 8.0;
    ref = run(fields, cfg, m0, opts).final_state();
  }

  ConvergenceTable table;
  for (size_t k = 0; k < taus.size(); ++k) {
    ConvergenceRow row;
    row.tau = taus[k];
    row.error = norms(fields.mesh(), finals[k] - ref).l2;
    if (k > 0) {
      const double tr = taus[k - 1] / taus[k];
      const double prev = table.rows.back().error;
      if (tr == 1.0 || prev == row.error)
        row.order = 0.0;
      else
        row.order = std::log(prev / row.error) / std::log(tr);
    }
    table.rows.push_back(row);
  }
  return table;
}

double weak_residual(const FieldEvaluator& fields, const Trajectory& traj,
                     const std::function<Vec3(const Vec3&)>& psi_tilde) {
  if (traj.states.size() < 2) return 0.0;
  const Mesh& mesh = fields.mesh();
  const MaterialParams& mat = fields.material();
  const LumpedMass& mass = fields.operators().mass;
  const double tau = traj.tau;
  const NodalField P = interpolate_nodal(mesh, psi_tilde);

  double total = 0.0;
  for (size_t n = 0; n + 1 < traj.states.size(); ++n) {
    const NodalField& ml = traj.states[n];  // left state of the interval
    const NodalField dm = (traj.states[n + 1] - ml) / tau;
    const NodalField psi = cross_field(ml, P);

    double acc = lumped_dot(mass, dm, psi);
    acc -= mat.alpha * lumped_dot(mass, cross_field(ml, dm), psi);
    acc += lumped_dot(mass, cross_field(ml, fields.lower_order(ml)), psi);

    for (const auto& t : mesh.tets) {
      const P1Gradients g = p1_gradients(
          {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]],
           mesh.vertices[t[3]]});
      const Vec3 mbar =
          0.25 * (ml.row(t[0]) + ml.row(t[1]) + ml.row(t[2]) + ml.row(t[3]))
                     .transpose();
      for (int k = 0; k < 3; ++k) {
        Vec3 dkm = Vec3::Zero(), dkpsi = Vec3::Zero();
        for (int a = 0; a < 4; ++a) {
          dkm += g.grad[a][k] * ml.row(t[a]).transpose();
          dkpsi += g.grad[a][k] * psi.row(t[a]).transpose();
        }
        acc -= mat.d2 * g.volume * mbar.cross(dkm).dot(dkpsi);
      }
    }
    total += tau * acc;
  }
  return std::abs(total);
}

EnergyLawSummary energy_law_summary(const Trajectory& traj) {
  EnergyLawSummary s;
  s.min_slack = std::numeric_limits<double>::infinity();
  s.max_energy_rise = -std::numeric_limits<double>::infinity();
  if (traj.records.size() < 2) {
    s.min_slack = 0.0;
    s.max_energy_rise = 0.0;
    return s;
  }
  for (size_t n = 1; n < traj.records.size(); ++n) {
    const StepRecord& r = traj.records[n];
    s.min_slack = std::min(s.min_slack, r.energy_slack);
    s.max_energy_rise =
        std::max(s.max_energy_rise,
                 r.energy.total - traj.records[n - 1].energy.total);
    s.summed_dissipation += traj.beta * traj.tau * r.v_l2 * r.v_l2;
  }
  return s;
}

}  // namespace llgfem
