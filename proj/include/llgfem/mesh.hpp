#pragma once

#include "llgfem/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace llgfem {

/// Structured-box provenance, kept so the padded embedding can reproduce the
/// grid exactly. `origin_cells` is the index offset of the first vertex, i.e.
/// vertex (i,j,k) sits at ((i + origin_cells) * spacing).
struct BoxSpec {
  int nx = 0, ny = 0, nz = 0;
  Vec3 spacing = Vec3::Zero();
  Eigen::Vector3i origin_cells = Eigen::Vector3i::Zero();
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::optional<BoxSpec> box;  // set only for meshes built by build_box_mesh

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }

  double total_volume() const;
  /// Mesh size h = longest edge over all tets.
  double max_diameter() const;

  /// Boundary faces as sorted vertex triples (faces shared by exactly one tet).
  std::vector<std::array<int, 3>> boundary_faces() const;

  /// Checks index ranges, positive signed volumes and face conformity
  /// (interior faces shared by exactly 2 tets). Throws Error on violation.
  void validate() const;
};

/// Structured nx*ny*nz box, each cell split into 6 tets by the Kuhn pattern
/// (all dihedral angles in {45, 60, 90} degrees, so the non-positive
/// off-diagonal stiffness condition holds).
Mesh build_box_mesh(int nx, int ny, int nz, const Vec3& lengths);

Mesh load_mesh_native(const std::string& path);
void write_mesh_native(const Mesh& mesh, const std::string& path);

struct MeshAuditReport {
  double max_offdiag = 0.0;  // largest off-diagonal global stiffness entry
  std::vector<std::pair<int, int>> violations;  // vertex pairs with entry > tol
  double min_dihedral = 0.0;  // radians
  double max_dihedral = 0.0;
  bool satisfies_condition = false;  // max_offdiag <= 1e-12
};

MeshAuditReport audit_mesh(const Mesh& mesh);

struct PaddedEmbedding {
  Mesh padded;
  std::vector<int> vertex_map;  // sample vertex -> padded vertex (injective)
};

/// Embeds a box mesh in a larger box of roughly padding_factor times the
/// sample extent, meshed at the sample's cell size. Sample vertices coincide
/// bit-exactly with their images. padding_factor == 1 returns the sample.
PaddedEmbedding embed_in_padded_box(const Mesh& mesh, double padding_factor);

}  // namespace llgfem
