#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "llgfem/diagnostics.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace llgfem;

namespace {

struct Setup {
  Mesh mesh;
  P1Operators ops;
  MaterialParams mat;
  FieldEvaluator fields;

  Setup(int n, const MaterialParams& params)
      : mesh(build_box_mesh(n, n, n, Vec3(1, 1, 1))),
        ops(assemble_operators(mesh)),
        mat(params),
        fields(mesh, ops, mat, StrayFieldBackend{}) {}
};

MaterialParams macrospin_material() {
  MaterialParams mat;
  mat.alpha = 1.0;
  mat.d2 = 0.01;  // inert for uniform states
  mat.H_ext = Vec3(0, 0, 2);
  return mat;
}

}  // namespace

TEST_CASE("closed-form macrospin agrees with direct ODE integration") {
  struct Case {
    double alpha;
    Vec3 H, m0;
    double t;
  };
  const Case cases[] = {
      {1.0, Vec3(0, 0, 2), Vec3(1, 0, 0), 1.0},
      {0.3, Vec3(1, -2, 0.5), Vec3(0.2, -0.4, 0.5).normalized(), 2.0},
      {2.5, Vec3(0.5, 0.1, -1.0), Vec3(0, 1, 0), 3.0},
      {0.05, Vec3(0, 0, 1), Vec3(0.9, 0, std::sqrt(1 - 0.81)), 5.0},
  };
  for (const auto& c : cases) {
    const Vec3 closed = macrospin_reference(c.alpha, c.H, c.m0, c.t);
    const Vec3 ode = oracles::rk4_gilbert(c.alpha, c.H, c.m0, c.t, 50000);
    CHECK((closed - ode).norm() <= 1e-8);
    CHECK(std::abs(closed.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("macrospin hand values") {
  // alpha = 1, H = 2 e_z, m0 = e_x: polar part tanh(t), azimuth t.
  const Vec3 m = macrospin_reference(1.0, Vec3(0, 0, 2), Vec3(1, 0, 0), 1.0);
  const double z = std::tanh(1.0);
  const double s = std::sqrt(1.0 - z * z);
  CHECK(std::abs(m[2] - z) <= 1e-12);
  CHECK(std::abs(m[0] - s * std::cos(1.0)) <= 1e-12);
  CHECK(std::abs(m[1] - s * std::sin(1.0)) <= 1e-12);
}

TEST_CASE("macrospin edge cases") {
  const Vec3 m0 = Vec3(0.3, -0.5, 0.8).normalized();
  CHECK((macrospin_reference(0.8, Vec3(1, 2, 3), m0, 0.0) - m0).norm() <=
        1e-14);
  CHECK((macrospin_reference(0.8, Vec3::Zero(), m0, 2.0) - m0).norm() == 0.0);

  // poles are fixed points
  const Vec3 up = macrospin_reference(1.0, Vec3(0, 0, 2), Vec3(0, 0, 1), 1.0);
  CHECK((up - Vec3(0, 0, 1)).norm() <= 1e-12);
  const Vec3 down =
      macrospin_reference(1.0, Vec3(0, 0, 2), Vec3(0, 0, -1), 1.0);
  CHECK((down - Vec3(0, 0, -1)).norm() <= 1e-12);

  // strong damping: aligns quickly, stays unit, z monotone
  double prev_z = 0.0;
  for (double t = 0.0; t <= 2.0; t += 0.1) {
    const Vec3 m = macrospin_reference(50.0, Vec3(0, 0, 2), Vec3(1, 0, 0), t);
    CHECK(std::abs(m.norm() - 1.0) <= 1e-12);
    CHECK(m[2] >= prev_z - 1e-14);
    prev_z = m[2];
  }
}

TEST_CASE("renormalization energy certificate") {
  const Mesh good = build_box_mesh(4, 4, 4, Vec3(1, 1, 1));
  const RenormalizationReport rep = renormalization_energy_test(good, 100, 7);
  CHECK(rep.applicable);
  CHECK(rep.trials == 100);
  CHECK(rep.passes == 100);
  CHECK(rep.worst_excess <= 1e-12);

  const RenormalizationReport again = renormalization_energy_test(good, 100, 7);
  CHECK(again.worst_excess == rep.worst_excess);  // pinned RNG

  Mesh sliver;
  sliver.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                     Vec3(0.9, 0.9, 0.05)};
  sliver.tets.push_back({0, 1, 2, 3});
  const RenormalizationReport na = renormalization_energy_test(sliver, 10, 7);
  CHECK_FALSE(na.applicable);
}

TEST_CASE("renormalizing a constant field keeps zero Dirichlet energy") {
  const Mesh mesh = build_box_mesh(2, 2, 2, Vec3(1, 1, 1));
  const StiffnessOperator K = assemble_stiffness(mesh);
  const NodalField u = uniform_field(mesh.num_vertices(), Vec3(1.5, 0, 0));
  NodalField r = u;
  r.rowwise().normalize();
  const double before = (u.array() * K.apply(u).array()).sum();
  const double after = (r.array() * K.apply(r).array()).sum();
  CHECK(std::abs(before) <= 1e-12);
  CHECK(after <= before + 1e-12);
}

TEST_CASE("convergence study against the analytic macrospin") {
  Setup s(2, macrospin_material());
  const NodalField m0 = uniform_field(s.mesh.num_vertices(), Vec3(1, 0, 0));

  SchemeConfig base;
  base.variant = SchemeVariant::order2;
  base.rho_mode = RhoMode::zero;
  base.m_mode = MMode::fixed;
  base.M_value = 1e6;
  base.T_final = 0.5;

  const std::vector<double> taus = {1.0 / 20, 1.0 / 40, 1.0 / 80};
  const ConvergenceTable table =
      convergence_study(s.fields, base, m0, taus, true);
  REQUIRE(table.rows.size() == 3);
  CHECK(table.rows[0].order == 0.0);
  for (size_t i = 1; i < table.rows.size(); ++i) {
    CHECK(table.rows[i].error < table.rows[i - 1].error);
    CHECK(table.rows[i].order >= 1.8);
  }
  CHECK(table.min_order() >= 1.8);

  base.variant = SchemeVariant::theta;
  base.theta = 1.0;
  const ConvergenceTable t1 = convergence_study(s.fields, base, m0, taus, true);
  for (size_t i = 1; i < t1.rows.size(); ++i) {
    CHECK(t1.rows[i].order >= 0.8);
    CHECK(t1.rows[i].order <= 1.3);
  }
}

TEST_CASE("convergence study input guards and degenerate tables") {
  Setup s(2, macrospin_material());
  const NodalField m0 = uniform_field(s.mesh.num_vertices(), Vec3(1, 0, 0));
  SchemeConfig base;
  base.variant = SchemeVariant::theta;
  base.theta = 1.0;
  base.T_final = 0.1;

  CHECK_THROWS_AS(convergence_study(s.fields, base, m0, {0.01, 0.005}, true),
                  Error);
  CHECK_THROWS_AS(
      convergence_study(s.fields, base, m0, {0.005, 0.01, 0.02}, true), Error);

  // identical steps give identical errors and order 0 by convention
  const ConvergenceTable flat =
      convergence_study(s.fields, base, m0, {0.01, 0.01, 0.01}, true);
  CHECK(flat.rows[1].error == flat.rows[0].error);
  CHECK(flat.rows[1].order == 0.0);
  CHECK(flat.rows[2].order == 0.0);
}

TEST_CASE("convergence study with a computed reference run") {
  Setup s(2, macrospin_material());
  const NodalField m0 = uniform_field(s.mesh.num_vertices(), Vec3(1, 0, 0));
  SchemeConfig base;
  base.variant = SchemeVariant::order2;
  base.rho_mode = RhoMode::zero;
  base.m_mode = MMode::fixed;
  base.M_value = 1e6;
  base.T_final = 0.04;

  const ConvergenceTable table = convergence_study(
      s.fields, base, m0, {1.0 / 50, 1.0 / 100, 1.0 / 200}, false);
  for (size_t i = 1; i < table.rows.size(); ++i) {
    CHECK(table.rows[i].error < table.rows[i - 1].error);
    CHECK(table.rows[i].order >= 1.5);
  }
}

TEST_CASE("weak-form residual") {
  SUBCASE("stationary trajectories satisfy the weak form exactly") {
    MaterialParams mat;
    mat.alpha = 1.0;
    mat.d2 = 1.0;
    mat.Q = 1.0;
    mat.e_axis = Vec3(0, 0, 1);
    mat.H_ext = Vec3(0, 0, 2);
    Setup s(3, mat);
    const NodalField m0 = uniform_field(s.mesh.num_vertices(), Vec3(0, 0, 1));
    SchemeConfig cfg;
    cfg.variant = SchemeVariant::theta;
    cfg.theta = 0.5;
    cfg.tau = 0.01;
    cfg.T_final = 0.05;
    const Trajectory traj = run(s.fields, cfg, m0);
    const double r = weak_residual(s.fields, traj, [](const Vec3& x) {
      return Vec3(std::sin(x[0]), x[1] * x[2], std::cos(x[2]));
    });
    CHECK(r <= 1e-10);
  }

  SUBCASE("zero test function gives zero residual") {
    Setup s(2, macrospin_material());
    const NodalField m0 = uniform_field(s.mesh.num_vertices(), Vec3(1, 0, 0));
    SchemeConfig cfg;
    cfg.variant = SchemeVariant::theta;
    cfg.theta = 1.0;
    cfg.tau = 0.01;
    cfg.T_final = 0.05;
    const Trajectory traj = run(s.fields, cfg, m0);
    CHECK(weak_residual(s.fields, traj,
                        [](const Vec3&) { return Vec3::Zero().eval(); }) == 0.0);
  }

  SUBCASE("residual shrinks under space-time refinement") {
    MaterialParams mat;  // exchange-only gradient flow
    const auto residual_at = [&](int n, double tau) {
      Setup s(n, mat);
      NodalField m0 = interpolate_nodal(s.mesh, [](const Vec3& x) {
        return Vec3(std::cos(M_PI * x[0]), std::sin(M_PI * x[0]),
                    1.0 + 0.5 * x[2]);
      });
      m0.rowwise().normalize();
      SchemeConfig cfg;
      cfg.variant = SchemeVariant::order2;
      cfg.rho_mode = RhoMode::tau_log_tau;
      cfg.m_mode = MMode::inv_sqrt_tau;
      cfg.tau = tau;
      cfg.T_final = 0.1;
      const Trajectory traj = run(s.fields, cfg, m0);
      return weak_residual(s.fields, traj, [](const Vec3& x) {
        return Vec3(x[1], -x[0], 0.5 * x[2] * x[0]);
      });
    };
    const double coarse = residual_at(4, 0.02);
    const double fine = residual_at(8, 0.01);
    MESSAGE("weak residual: " << coarse << " -> " << fine);
    CHECK(fine < coarse);
  }
}

TEST_CASE("energy-law summary over a dissipative run") {
  MaterialParams mat;  // exchange only
  Setup s(3, mat);
  const NodalField m0 = random_unit_field(s.mesh.num_vertices(), 11);
  SchemeConfig cfg;
  cfg.variant = SchemeVariant::order2;
  cfg.rho_mode = RhoMode::tau_log_tau;
  cfg.m_mode = MMode::inv_sqrt_tau;
  cfg.tau = 1e-3;
  cfg.T_final = 0.05;
  const Trajectory traj = run(s.fields, cfg, m0);

  const EnergyLawSummary sum = energy_law_summary(traj);
  const double e0 = traj.records.front().energy.total;
  const double eN = traj.records.back().energy.total;
  CHECK(sum.min_slack >= -1e-10 * std::abs(e0));
  CHECK(sum.max_energy_rise <= 1e-10 * std::abs(e0));
  // with zero slack budget, the dissipation cannot exceed the energy drop
  CHECK(sum.summed_dissipation <= (e0 - eN) * (1.0 + 1e-8) + 1e-12);
  CHECK(sum.summed_dissipation > 0.0);
}
