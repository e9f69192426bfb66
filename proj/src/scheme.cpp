#include "llgfem/scheme.hpp"

#include <cmath>
#include <sstream>

namespace llgfem {

TangentBasis tangent_basis(const NodalField& m) {
  TangentBasis basis;
  basis.t1.resize(m.rows(), 3);
  basis.t2.resize(m.rows(), 3);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Vec3 mi = m.row(i).transpose();
    int a = 0;
    if (std::abs(mi[1]) < std::abs(mi[a])) a = 1;
    if (std::abs(mi[2]) < std::abs(mi[a])) a = 2;
    const Vec3 t1 = Vec3::Unit(a).cross(mi).normalized();
    basis.t1.row(i) = t1.transpose();
    basis.t2.row(i) = mi.cross(t1).transpose();
  }
  return basis;
}

Eigen::VectorXd tangent_pack(const TangentBasis& basis, const NodalField& w) {
  Eigen::VectorXd y(2 * w.rows());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    y[2 * i] = w.row(i).dot(basis.t1.row(i));
    y[2 * i + 1] = w.row(i).dot(basis.t2.row(i));
  }
  return y;
}

NodalField tangent_unpack(const TangentBasis& basis,
                          const Eigen::VectorXd& y) {
  NodalField w(y.size() / 2, 3);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    w.row(i) = y[2 * i] * basis.t1.row(i) + y[2 * i + 1] * basis.t2.row(i);
  return w;
}

double SchemeConfig::rho() const {
  switch (rho_mode) {
    case RhoMode::zero:
      return 0.0;
    case RhoMode::tau_log_tau:
      return tau * std::abs(std::log(tau));
    case RhoMode::constant:
      return rho_value;
  }
  return 0.0;
}

double SchemeConfig::M() const {
  return m_mode == MMode::inv_sqrt_tau ? 1.0 / std::sqrt(tau) : M_value;
}

int SchemeConfig::num_steps() const {
  return static_cast<int>(std::llround(T_final / tau));
}

SchemeVariant parse_variant(const std::string& s) {
  if (s == "theta") return SchemeVariant::theta;
  if (s == "order2") return SchemeVariant::order2;
  throw Error("unknown scheme variant '" + s + "'");
}

RhoMode parse_rho_mode(const std::string& s) {
  if (s == "zero") return RhoMode::zero;
  if (s == "tau_log_tau") return RhoMode::tau_log_tau;
  throw Error("unknown rho mode '" + s + "'");
}

ConfigCheck validate_config(const SchemeConfig& cfg, const Mesh& mesh) {
  ConfigCheck check;
  const auto fail = [&](const std::string& msg) {
    check.ok = false;
    check.violations.push_back(msg);
  };

  if (!(cfg.tau > 0.0)) fail("tau must be positive");
  if (!(cfg.T_final >= 0.0)) fail("T_final must be nonnegative");
  if (!(cfg.krylov.tolerance > 0.0)) fail("krylov tolerance must be positive");
  if (cfg.krylov.max_iterations < 1) fail("krylov max_iterations must be >= 1");
  if (!(cfg.c_budget >= 0.0)) fail("c_budget must be nonnegative");
  if (!check.ok) return check;

  if (cfg.variant == SchemeVariant::theta) {
    if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0))
      fail("theta must lie in [0,1]");
    return check;
  }

  // order2: one of the two stabilization regimes must hold.
  if (!(cfg.M() > 0.0)) fail("cutoff M must be positive");
  const double rho = cfg.rho();
  if (rho < 0.0) fail("rho must be nonnegative");
  if (cfg.rho_mode == RhoMode::tau_log_tau && cfg.tau >= 1.0)
    fail("rho = tau|ln tau| requires tau < 1");
  if (!check.ok) return check;

  if (rho > 0.0) {
    // Stabilized regime: rho/tau blows up as tau -> 0 (tau|ln tau| or a
    // positive constant); the cutoff must still vanish in the limit.
    const double tm = cfg.tau * cfg.M();
    if (tm >= 0.5) {
      std::ostringstream os;
      os << "stabilized regime needs tau*M < 0.5 (got " << tm << ")";
      fail(os.str());
    }
  } else {
    const double h = mesh.max_diameter();
    if (cfg.tau > cfg.c_regime * h) {
      std::ostringstream os;
      os << "with rho = 0 the step must satisfy tau <= " << cfg.c_regime
         << "*h = " << cfg.c_regime * h << " (got tau = " << cfg.tau << ")";
      fail(os.str());
    }
  }
  return check;
}

namespace {

struct TangentSolve {
  NodalField v;
  KrylovStats stats;
  double residual = 0.0;
};

// Shared Krylov driver: apply3 maps a tangential nodal field to the nodal
// residual vector (3N form); the solve runs in the 2N tangent coordinates.
template <class Apply3>
TangentSolve solve_tangent_system(const TangentBasis& basis,
                                  const NodalField& rhs3,
                                  const Eigen::VectorXd& jacobi,
                                  const Apply3& apply3,
                                  const KrylovConfig& krylov,
                                  const char* label) {
  const Eigen::VectorXd b = tangent_pack(basis, rhs3);
  const auto apply = [&](const Eigen::VectorXd& y) {
    return tangent_pack(basis, apply3(tangent_unpack(basis, y)));
  };
  const auto precond = [&](const Eigen::VectorXd& r) {
    return (r.array() / jacobi.array()).matrix().eval();
  };
  Eigen::VectorXd y = Eigen::VectorXd::Zero(b.size());
  TangentSolve out;
  out.stats =
      bicgstab(apply, precond, b, y, krylov.tolerance, krylov.max_iterations);
  if (!out.stats.converged)
    throw SolveError(std::string(label) + " did not converge",
                     out.stats.iterations, out.stats.residual);
  out.residual = (b - apply(y)).norm();
  out.v = tangent_unpack(basis, y);
  return out;
}

Eigen::VectorXd interleave2(const Eigen::VectorXd& d) {
  Eigen::VectorXd j(2 * d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) j[2 * i] = j[2 * i + 1] = d[i];
  return j;
}

}  // namespace

StepResult solve_theta_step(const FieldEvaluator& fields, const NodalField& m,
                            double theta, double tau,
                            const KrylovConfig& krylov) {
  const MaterialParams& mat = fields.material();
  const P1Operators& ops = fields.operators();
  const Eigen::VectorXd& V = ops.mass.weights;

  const TangentBasis basis = tangent_basis(m);
  const EffectiveField eff = fields.evaluate(m);
  const NodalField rhs3 = V.asDiagonal() * eff.total;

  const double imp = theta * tau * mat.d2;
  const auto apply3 = [&](const NodalField& v) {
    NodalField w = V.asDiagonal() * (mat.alpha * v + cross_field(m, v));
    if (imp != 0.0) w += imp * ops.stiffness.apply(v);
    return w;
  };
  const Eigen::VectorXd jacobi =
      interleave2(mat.alpha * V + imp * ops.stiffness.diagonal());

  TangentSolve sol = solve_tangent_system(basis, rhs3, jacobi, apply3, krylov,
                                          "tangent-plane theta solve");
  return {std::move(sol.v), sol.stats, sol.residual};
}

StepResult solve_order2_step(const FieldEvaluator& fields, const NodalField& m,
                             const SchemeConfig& cfg) {
  const MaterialParams& mat = fields.material();
  const P1Operators& ops = fields.operators();
  const Eigen::VectorXd& V = ops.mass.weights;
  const double tau = cfg.tau;
  const double M = cfg.M();

  const double beta = mat.alpha / (1.0 + 0.5 * tau * M);
  if (beta - 0.5 * tau * mat.Q <= 0.0) {
    std::ostringstream os;
    os << "order2 step rejected: damping floor alpha/(1+tau*M/2) = " << beta
       << " does not exceed tau*Q/2 = " << 0.5 * tau * mat.Q
       << "; the symmetric part may lose definiteness";
    throw Error(os.str());
  }

  const TangentBasis basis = tangent_basis(m);
  const EffectiveField eff = fields.evaluate(m);
  const NodalField rhs3 = V.asDiagonal() * eff.total;

  const Eigen::VectorXd phi =
      cutoff_coefficients(m, eff.total, mat.alpha, tau, M);
  const Eigen::VectorXd phiV = phi.cwiseProduct(V);
  const double imp = 0.5 * tau * (1.0 + cfg.rho()) * mat.d2;
  const bool implicit_low = cfg.coupling == Coupling::full;

  const auto apply3 = [&](const NodalField& v) {
    NodalField w = phiV.asDiagonal() * v;
    w += V.asDiagonal() * cross_field(m, v);
    if (imp != 0.0) w += imp * ops.stiffness.apply(v);
    if (implicit_low) {
      if (fields.has_stray())
        w -= 0.5 * tau * (V.asDiagonal() * fields.stray(v));
      if (mat.Q != 0.0)
        w -= (0.5 * tau * mat.Q) *
             ((v * mat.e_axis).cwiseProduct(V)) * mat.e_axis.transpose();
    }
    return w;
  };
  const Eigen::VectorXd jacobi =
      interleave2(phiV + imp * ops.stiffness.diagonal());

  TangentSolve sol = solve_tangent_system(basis, rhs3, jacobi, apply3,
                                          cfg.krylov,
                                          "tangent-plane order2 solve");
  return {std::move(sol.v), sol.stats, sol.residual};
}

NodalField renormalize_update(const NodalField& m, const NodalField& v,
                              double tau) {
  const double worst =
      (m.array() * v.array()).rowwise().sum().abs().maxCoeff();
  if (worst > 1e-8) {
    std::ostringstream os;
    os << "tangential update violates nodal orthogonality (max |v.m| = "
       << worst << ")";
    throw Error(os.str());
  }
  NodalField out = m + tau * v;
  out.rowwise().normalize();
  return out;
}

Trajectory run(const FieldEvaluator& fields, const SchemeConfig& cfg,
               const NodalField& m0, const RunOptions& opts) {
  if (m0.rows() != fields.mesh().num_vertices())
    throw Error("initial data size does not match the mesh");
  const double unit_err = (m0.rowwise().norm().array() - 1.0).abs().maxCoeff();
  if (unit_err > 1e-12)
    throw Error("initial data must have unit nodal norms (max deviation " +
                std::to_string(unit_err) + ")");

  const int nsteps = cfg.num_steps();
  const MaterialParams& mat = fields.material();
  const double tau = cfg.tau;

  Trajectory traj;
  traj.tau = tau;
  traj.beta = cfg.variant == SchemeVariant::order2
                  ? mat.alpha / (1.0 + 0.5 * tau * cfg.M())
                  : mat.alpha;
  traj.records.reserve(nsteps + 1);

  bool check_energy = false;
  if (opts.debug_energy_check)
    check_energy = audit_mesh(fields.mesh()).satisfies_condition;

  NodalField m = m0;
  EnergyBreakdown energy = fields.energy(m);
  StepRecord rec;
  rec.energy = energy;
  traj.records.push_back(rec);
  if (opts.store_states) traj.states.push_back(m);

  for (int n = 0; n < nsteps; ++n) {
    try {
      StepResult sr =
          cfg.variant == SchemeVariant::theta
              ? solve_theta_step(fields, m, cfg.theta, tau, cfg.krylov)
              : solve_order2_step(fields, m, cfg);

      const double tangency =
          (m.array() * sr.v.array()).rowwise().sum().abs().maxCoeff();
      NodalField m_next = renormalize_update(m, sr.v, tau);

      if (check_energy) {
        const NodalField pre = m + tau * sr.v;
        const double before = norms(fields.mesh(), pre).h1_semi;
        const double after = norms(fields.mesh(), m_next).h1_semi;
        if (after * after > before * before * (1.0 + 1e-12))
          throw Error("renormalization increased the Dirichlet energy");
      }

      const EnergyBreakdown next = fields.energy(m_next);
      const double vnorm2 = lumped_dot(fields.operators().mass, sr.v, sr.v);

      StepRecord r;
      r.step = n + 1;
      r.t = (n + 1) * tau;
      r.energy = next;
      r.v_l2 = std::sqrt(vnorm2);
      r.tangency_residual = tangency;
      r.variational_residual = sr.variational_residual;
      r.energy_slack =
          energy.total + tau * cfg.c_budget - next.total - traj.beta * tau * vnorm2;
      r.krylov = sr.krylov;
      traj.records.push_back(r);

      if (opts.store_states) {
        traj.states.push_back(m_next);
        traj.velocities.push_back(std::move(sr.v));
      }
      m = std::move(m_next);
      energy = next;
    } catch (const Error& e) {
      std::ostringstream os;
      const auto nn = m.rowwise().norm();
      os << "step " << n << " (t = " << n * tau << "): " << e.what()
         << " [state: E = " << energy.total << ", |m_i| in [" << nn.minCoeff()
         << ", " << nn.maxCoeff() << "]]";
      throw Error(os.str());
    }
  }
  return traj;
}

}  // namespace llgfem
