#pragma once

#include "llgfem/scheme.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace llgfem {

/// Closed-form solution of the uniform-magnetization dynamics
///   (1+alpha^2) m_t = -m x H - alpha m x (m x H),  H constant:
/// in the frame with H along z, m_z(t) = tanh(alpha|H|t/(1+alpha^2) +
/// artanh(m_z(0))) while the azimuth advances by |H|t/(1+alpha^2).
/// |H| = 0 returns m0.
Vec3 macrospin_reference(double alpha, const Vec3& H, const Vec3& m0,
                         double t);

struct RenormalizationReport {
  bool applicable = false;  // mesh passes the off-diagonal audit
  int trials = 0;
  int passes = 0;
  double worst_excess = 0.0;  // max over trials of (E_renorm - E)/max(E,eps)
};

/// Dirichlet-energy comparison of nodal renormalization: for random fields
/// with nodal norms in [1,3], check |grad I_h(u/|u|)|^2 <= |grad u|^2.
/// Guaranteed only on meshes whose assembled stiffness has no positive
/// off-diagonal entries; otherwise the report is marked not applicable.
RenormalizationReport renormalization_energy_test(const Mesh& mesh, int trials,
                                                  std::uint64_t seed);

struct ConvergenceRow {
  double tau = 0.0;
  double error = 0.0;   // L2(domain) distance to the reference at T_final
  double order = 0.0;   // vs the previous row; 0 for the first row
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double min_order() const;  // over rows 1..end
};

/// Runs `base` once per tau (non-increasing positive list, >= 3 entries;
/// throws Error otherwise; repeated entries are legal and yield order 0).
/// The reference at T_final is the analytic macrospin solution when
/// `analytic_macrospin` is set (uniform m0 required), else a run at tau_min/8.
ConvergenceTable convergence_study(const FieldEvaluator& fields,
                                   const SchemeConfig& base,
                                   const NodalField& m0,
                                   const std::vector<double>& taus,
                                   bool analytic_macrospin);

/// Mismatch of the weak form over a stored trajectory with test function
/// Psi = I_h(m^- x psi_tilde): absolute value of
///   sum_n tau [ <dm/dt, Psi>_L - alpha <m^- x dm/dt, Psi>_L
///               - d2 (m^- x grad m^-, grad Psi) + <m^- x H_low(m^-), Psi>_L ]
/// where dm/dt = (m^{n+1}-m^n)/tau and m^- is the left state of each step.
double weak_residual(const FieldEvaluator& fields, const Trajectory& traj,
                     const std::function<Vec3(const Vec3&)>& psi_tilde);

struct EnergyLawSummary {
  double min_slack = 0.0;        // over all steps
  double max_energy_rise = 0.0;  // max over n of E^{n+1} - E^n
  double summed_dissipation = 0.0;  // beta * tau * sum |v^n|_L^2
};

EnergyLawSummary energy_law_summary(const Trajectory& traj);

}  // namespace llgfem
