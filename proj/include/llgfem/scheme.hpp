#pragma once

#include "llgfem/bicgstab.hpp"
#include "llgfem/field.hpp"

#include <string>
#include <vector>

namespace llgfem {

/// Per-vertex orthonormal pair spanning the plane orthogonal to m_i.
/// t1_i = normalize(a x m_i) with a the coordinate axis of smallest
/// |m_i . a| (lowest index on ties); t2_i = m_i x t1_i.  Deterministic and
/// never degenerate for unit m_i.
struct TangentBasis {
  NodalField t1, t2;
};

TangentBasis tangent_basis(const NodalField& m);

/// Tangent coordinates y interleave (w_i.t1_i, w_i.t2_i) per vertex.
Eigen::VectorXd tangent_pack(const TangentBasis& basis, const NodalField& w);
NodalField tangent_unpack(const TangentBasis& basis, const Eigen::VectorXd& y);

enum class SchemeVariant { theta, order2 };
enum class RhoMode { zero, tau_log_tau, constant };
enum class MMode { fixed, inv_sqrt_tau };
enum class Coupling { full, drop_lower_order_implicit };

struct KrylovConfig {
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 500;
};

struct SchemeConfig {
  SchemeVariant variant = SchemeVariant::order2;
  double theta = 0.5;            // theta variant only, in [0,1]
  double tau = 1e-3;
  double T_final = 0.1;
  RhoMode rho_mode = RhoMode::tau_log_tau;
  double rho_value = 0.0;        // rho_mode == constant
  MMode m_mode = MMode::inv_sqrt_tau;
  double M_value = 1.0;          // m_mode == fixed
  KrylovConfig krylov;
  Coupling coupling = Coupling::full;
  double c_regime = 1.0;         // step bound tau <= c_regime * h when rho == 0
  double c_budget = 0.0;         // allowance per step in the energy-law slack

  double rho() const;
  double M() const;
  int num_steps() const;         // round(T_final / tau)
};

SchemeVariant parse_variant(const std::string& s);
RhoMode parse_rho_mode(const std::string& s);

struct ConfigCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Accepts the theta variant for theta in [0,1].  Accepts order2 when either
/// stabilization regime holds: (i) rho grows superlinearly in tau (tau_log_tau,
/// or a positive constant) together with tau*M < 0.5, or (ii) rho == 0 and
/// tau <= c_regime * h.
ConfigCheck validate_config(const SchemeConfig& cfg, const Mesh& mesh);

struct StepResult {
  NodalField v;
  KrylovStats krylov;
  double variational_residual = 0.0;  // assembled 3N residual on the tangent space
};

/// First-order stepper: find v with v_i . m_i = 0 such that for every nodal
/// tangent test function (zeroth-order terms vertex-lumped)
///   alpha <v,Psi> + <m x v, Psi> + theta*tau*d2 (grad v, grad Psi)
///     = -d2 (grad m, grad Psi) + <H_low(m), Psi>.
StepResult solve_theta_step(const FieldEvaluator& fields, const NodalField& m,
                            double theta, double tau,
                            const KrylovConfig& krylov);

/// Second-order stepper: mass coefficient alpha is replaced by the clipped
/// phi(H_eff.m) and the half-step terms
///   (tau/2)[(1+rho)*d2 (grad v, grad Psi) - <H_d(v),Psi> - Q<(e.v)e,Psi>]
/// join the left-hand side (the last two only when coupling == full).
/// Throws Error when the damping floor beta = alpha/(1+tau*M/2) does not
/// exceed tau*Q/2 (symmetric part may lose definiteness).
StepResult solve_order2_step(const FieldEvaluator& fields, const NodalField& m,
                             const SchemeConfig& cfg);

/// Step b of both algorithms: m_i <- (m_i + tau v_i)/|m_i + tau v_i|.
/// Throws Error if max_i |v_i . m_i| > 1e-8 (upstream solver bug).
NodalField renormalize_update(const NodalField& m, const NodalField& v,
                              double tau);

struct StepRecord {
  int step = 0;        // state index n (record 0 is the initial state)
  double t = 0.0;
  EnergyBreakdown energy;             // of m^n
  double v_l2 = 0.0;                  // lumped L2 norm of v^{n-1}
  double tangency_residual = 0.0;     // max_i |v_i . m_i| of that solve
  double variational_residual = 0.0;
  double energy_slack = 0.0;          // E^{n-1} + tau*c_budget - E^n - beta*tau*|v|^2
  KrylovStats krylov;
};

struct RunOptions {
  bool store_states = true;      // keep m^n and v^n for posthoc diagnostics
  bool debug_energy_check = false;  // assert the renormalization inequality
                                    // each step (meaningful on meshes passing
                                    // the off-diagonal audit)
};

struct Trajectory {
  std::vector<StepRecord> records;    // N+1 entries
  std::vector<NodalField> states;     // m^0 .. m^N   (store_states)
  std::vector<NodalField> velocities; // v^0 .. v^{N-1} (store_states)
  double tau = 0.0;
  double beta = 0.0;  // damping floor used in the slack: alpha (theta scheme)
                      // or alpha/(1+tau*M/2) (order2)

  const NodalField& final_state() const { return states.back(); }
};

/// The time loop: N = round(T_final/tau) steps of solve -> renormalize ->
/// record.  Any step failure is rethrown with the step index prepended.
Trajectory run(const FieldEvaluator& fields, const SchemeConfig& cfg,
               const NodalField& m0, const RunOptions& opts = {});

}  // namespace llgfem
