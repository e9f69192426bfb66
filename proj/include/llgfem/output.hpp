#pragma once

#include "llgfem/mesh.hpp"
#include "llgfem/scheme.hpp"
#include "llgfem/types.hpp"

#include <string>
#include <vector>

namespace llgfem {

/// Shortest-exact decimal form of a double (17 significant digits).
std::string format_double(double x);

/// One row per record:
///   t,E_total,E_exch,E_stray,E_zeeman,E_aniso,v_l2,tangency_residual,energy_law_slack
/// `comments` become leading `# ` lines (run provenance, seed).
void write_csv(const std::string& path, const std::vector<StepRecord>& records,
               const std::vector<std::string>& comments);

/// Legacy ASCII unstructured grid (tetra cells) with one point-data vector
/// field named `m`.
void write_vtk_snapshot(const std::string& path, const Mesh& mesh,
                        const NodalField& m);

/// Reads back the `m` point vectors of a snapshot (round-trip checks).
NodalField read_vtk_point_vectors(const std::string& path);

}  // namespace llgfem
