#include "CLI11.hpp"

#include "llgfem/config.hpp"
#include "llgfem/diagnostics.hpp"
#include "llgfem/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace llgfem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitVerification = 4;

// Returns nullopt and sets `code` when the config cannot be used.
std::optional<RunConfig> load_config(const std::string& path, int& code) {
  try {
    return parse_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    code = kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kExitRuntime;
  }
  return std::nullopt;
}

// Regime validation shared by the simulating subcommands; returns false when
// strict mode turns violations into a config failure.
bool check_regimes(const RunConfig& cfg, const Mesh& mesh) {
  const ConfigCheck chk = validate_config(cfg.scheme, mesh);
  if (chk.ok) return true;
  std::cerr << (cfg.strict_regimes ? "config error" : "warning")
            << ": scheme configuration violates the stabilization regimes:\n";
  for (const auto& v : chk.violations) std::cerr << "  - " << v << "\n";
  return !cfg.strict_regimes;
}

std::vector<std::string> csv_comments(const RunConfig& cfg) {
  std::vector<std::string> c;
  c.push_back(std::string("variant: ") +
              (cfg.scheme.variant == SchemeVariant::theta ? "theta" : "order2"));
  c.push_back("tau: " + format_double(cfg.scheme.tau));
  if (cfg.initial.kind == InitialCondition::Kind::random_seeded)
    c.push_back("seed: " + std::to_string(cfg.initial.seed));
  return c;
}

int cmd_run(const std::string& cfg_path) {
  int code = kExitRuntime;
  const auto cfg = load_config(cfg_path, code);
  if (!cfg) return code;

  try {
    const Mesh mesh = make_mesh(cfg->mesh);
    const NodalField m0 = make_initial(cfg->initial, mesh);
    if (!check_regimes(*cfg, mesh)) return kExitConfig;

    const P1Operators ops = assemble_operators(mesh);
    const FieldEvaluator fields(mesh, ops, cfg->material, cfg->stray);
    const Trajectory traj = run(fields, cfg->scheme, m0);

    if (!cfg->output.csv_path.empty())
      write_csv(cfg->output.csv_path, traj.records, csv_comments(*cfg));
    if (!cfg->output.vtk_dir.empty()) {
      std::filesystem::create_directories(cfg->output.vtk_dir);
      const int last = static_cast<int>(traj.states.size()) - 1;
      for (int n = 0; n <= last; n += cfg->output.stride) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%06d.vtk", n);
        write_vtk_snapshot(cfg->output.vtk_dir + "/" + name, mesh,
                           traj.states[n]);
      }
      if (last >= 0 && last % cfg->output.stride != 0) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%06d.vtk", last);
        write_vtk_snapshot(cfg->output.vtk_dir + "/" + name, mesh,
                           traj.states[last]);
      }
    }

    const EnergyLawSummary law = energy_law_summary(traj);
    std::cout << "steps: " << traj.records.size() - 1 << "\n"
              << "final energy: " << format_double(traj.records.back().energy.total)
              << "\n"
              << "min energy-law slack: " << format_double(law.min_slack)
              << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_check_mesh(const std::string& mesh_path) {
  try {
    const Mesh mesh = load_mesh_native(mesh_path);
    const MeshAuditReport rep = audit_mesh(mesh);
    std::cout << "vertices: " << mesh.num_vertices() << "\n"
              << "tets: " << mesh.num_tets() << "\n"
              << "volume: " << format_double(mesh.total_volume()) << "\n"
              << "mesh size h: " << format_double(mesh.max_diameter()) << "\n"
              << "dihedral range: [" << rep.min_dihedral * 180.0 / M_PI << ", "
              << rep.max_dihedral * 180.0 / M_PI << "] degrees\n"
              << "max off-diagonal stiffness entry: "
              << format_double(rep.max_offdiag) << "\n"
              << "positive off-diagonal pairs: " << rep.violations.size()
              << "\n"
              << "renormalization-safe (non-positive off-diagonals): "
              << (rep.satisfies_condition ? "yes" : "no") << "\n";
    return rep.satisfies_condition ? kExitOk : kExitVerification;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_macrospin(const std::string& cfg_path, double tol) {
  int code = kExitRuntime;
  const auto cfg = load_config(cfg_path, code);
  if (!cfg) return code;

  if (cfg->initial.kind != InitialCondition::Kind::uniform ||
      cfg->stray.mode != StrayFieldBackend::Mode::none ||
      cfg->material.Q != 0.0) {
    std::cerr << "config error: the macrospin comparison needs a uniform "
                 "initial state, stray mode none and Q=0\n";
    return kExitConfig;
  }

  try {
    const Mesh mesh = make_mesh(cfg->mesh);
    const NodalField m0 = make_initial(cfg->initial, mesh);
    if (!check_regimes(*cfg, mesh)) return kExitConfig;

    const P1Operators ops = assemble_operators(mesh);
    const FieldEvaluator fields(mesh, ops, cfg->material, cfg->stray);
    const Trajectory traj = run(fields, cfg->scheme, m0);

    const NodalField& mf = traj.final_state();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < mf.rows(); ++i) {
      const Vec3 ref =
          macrospin_reference(cfg->material.alpha, cfg->material.H_ext,
                              m0.row(i).transpose(), cfg->scheme.T_final);
      worst = std::max(worst, (mf.row(i).transpose() - ref).norm());
    }
    std::cout << "max nodal error vs closed form: " << format_double(worst)
              << " (tolerance " << format_double(tol) << ")\n";
    return worst <= tol ? kExitOk : kExitVerification;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_convergence(const std::string& cfg_path, std::string taus_arg,
                    double min_order) {
  int code = kExitRuntime;
  const auto cfg = load_config(cfg_path, code);
  if (!cfg) return code;

  std::vector<double> taus;
  if (taus_arg.empty()) {
    taus = {cfg->scheme.tau, cfg->scheme.tau / 2.0, cfg->scheme.tau / 4.0};
  } else {
    std::istringstream ss(taus_arg);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        taus.push_back(std::stod(part));
      } catch (const std::exception&) {
        std::cerr << "usage error: cannot parse step size '" << part << "'\n";
        return kExitUsage;
      }
    }
  }

  try {
    const Mesh mesh = make_mesh(cfg->mesh);
    const NodalField m0 = make_initial(cfg->initial, mesh);
    RunConfig largest = *cfg;
    largest.scheme.tau = taus.front();
    if (!check_regimes(largest, mesh)) return kExitConfig;

    const P1Operators ops = assemble_operators(mesh);
    const FieldEvaluator fields(mesh, ops, cfg->material, cfg->stray);

    const bool analytic =
        cfg->initial.kind == InitialCondition::Kind::uniform &&
        cfg->stray.mode == StrayFieldBackend::Mode::none &&
        cfg->material.Q == 0.0;
    std::cout << "reference: "
              << (analytic ? "closed-form uniform solution"
                           : "run at smallest tau / 8")
              << "\n";

    const ConvergenceTable table =
        convergence_study(fields, cfg->scheme, m0, taus, analytic);
    std::printf("%14s %16s %10s\n", "tau", "error", "order");
    for (const auto& row : table.rows)
      std::printf("%14.8g %16.10g %10.3f\n", row.tau, row.error, row.order);

    if (min_order > 0.0 && table.min_order() < min_order) {
      std::cerr << "verification failure: observed order "
                << table.min_order() << " < required " << min_order << "\n";
      return kExitVerification;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_demag_test(const std::string& cfg_path, double tol) {
  int code = kExitRuntime;
  const auto cfg = load_config(cfg_path, code);
  if (!cfg) return code;

  if (cfg->stray.mode != StrayFieldBackend::Mode::truncated_fem) {
    std::cerr << "config error: demag-test needs [stray] mode=truncated_fem\n";
    return kExitConfig;
  }
  if (cfg->mesh.kind != MeshSource::Kind::box ||
      cfg->initial.kind != InitialCondition::Kind::uniform) {
    std::cerr << "config error: demag-test needs a box mesh and a uniform "
                 "initial direction\n";
    return kExitConfig;
  }

  try {
    const Mesh mesh = make_mesh(cfg->mesh);
    const NodalField m = make_initial(cfg->initial, mesh);
    const P1Operators ops = assemble_operators(mesh);
    const StrayFieldSolver solver(mesh, cfg->stray);
    const NodalField H = solver.evaluate(m);

    const Eigen::VectorXd& V = ops.mass.weights;
    const Vec3 avg = (H.transpose() * V) / ops.mass.total;
    const Vec3 expected = -m.row(0).transpose() / 3.0;

    // Error relative to the |m|/3 scale of a unit uniform state.
    double worst = 0.0;
    std::cout << "volume-averaged stray field vs -m/3:\n";
    for (int c = 0; c < 3; ++c) {
      const double rel = std::abs(avg[c] - expected[c]) * 3.0;
      worst = std::max(worst, rel);
      std::printf("  %c: %14.8g  expected %14.8g  (relative deviation %.4f)\n",
                  "xyz"[c], avg[c], expected[c], rel);
    }
    std::cout << "worst relative deviation: " << worst << " (tolerance " << tol
              << ")\n";
    return worst <= tol ? kExitOk : kExitVerification;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tangent-plane finite-element micromagnetics"};
  app.require_subcommand(1);

  std::string run_cfg;
  auto* run_cmd = app.add_subcommand("run", "simulate and write CSV/VTK output");
  run_cmd->add_option("config", run_cfg, "configuration file")->required();

  std::string mesh_path;
  auto* check_cmd =
      app.add_subcommand("check-mesh", "audit a mesh for the renormalization-"
                                       "safety (angle) condition");
  check_cmd->add_option("mesh", mesh_path, "native mesh file")->required();

  std::string macro_cfg;
  double macro_tol = 5e-3;
  auto* macro_cmd = app.add_subcommand(
      "macrospin", "compare a uniform-state run to the closed-form solution");
  macro_cmd->add_option("config", macro_cfg, "configuration file")->required();
  macro_cmd->add_option("--tol", macro_tol, "max nodal error tolerance");

  std::string conv_cfg, conv_taus;
  double conv_min_order = 0.0;
  auto* conv_cmd =
      app.add_subcommand("convergence", "time-step refinement order study");
  conv_cmd->add_option("config", conv_cfg, "configuration file")->required();
  conv_cmd->add_option("--taus", conv_taus,
                       "comma-separated step sizes (default tau,tau/2,tau/4)");
  conv_cmd->add_option("--min-order", conv_min_order,
                       "fail (exit 4) if the observed order drops below this");

  std::string demag_cfg;
  double demag_tol = 0.1;
  auto* demag_cmd = app.add_subcommand(
      "demag-test", "uniform-cube stray-field check against -m/3");
  demag_cmd->add_option("config", demag_cfg, "configuration file")->required();
  demag_cmd->add_option("--tol", demag_tol, "relative tolerance per component");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (run_cmd->parsed()) return cmd_run(run_cfg);
  if (check_cmd->parsed()) return cmd_check_mesh(mesh_path);
  if (macro_cmd->parsed()) return cmd_macrospin(macro_cfg, macro_tol);
  if (conv_cmd->parsed())
    return cmd_convergence(conv_cfg, conv_taus, conv_min_order);
  if (demag_cmd->parsed()) return cmd_demag_test(demag_cfg, demag_tol);
  return kExitUsage;
}
