#pragma once

#include "llgfem/fem.hpp"
#include "llgfem/mesh.hpp"
#include "llgfem/types.hpp"

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include <memory>
#include <string>

namespace llgfem {

/// Dimensionless material set (gyromagnetic factor scaled to 1).
struct MaterialParams {
  double alpha = 1.0;      // Gilbert damping, > 0
  double d2 = 1.0;         // exchange constant d^2, >= 0
  double Q = 0.0;          // uniaxial anisotropy strength, >= 0
  Vec3 e_axis{0, 0, 1};    // easy axis, unit length
  Vec3 H_ext{0, 0, 0};     // applied field

  void validate() const;   // throws Error
};

/// Magnetostatics on a padded box: solve for the scalar potential with u = 0
/// on the far boundary, then sample H = -grad u back on the magnet.
struct StrayFieldBackend {
  enum class Mode { none, truncated_fem };
  Mode mode = Mode::none;
  double padding_factor = 4.0;  // box edge multiple, >= 2
  double tol = 1e-10;
  int max_iterations = 4000;
};

StrayFieldBackend::Mode parse_stray_mode(const std::string& s);

class StrayFieldSolver {
 public:
  StrayFieldSolver(const Mesh& mesh, const StrayFieldBackend& backend);

  /// H_d at the vertices of the sample mesh.  Throws SolveError if the
  /// potential solve stalls.
  NodalField evaluate(const NodalField& m) const;

  /// <H_d(u), v> under vertex quadrature; symmetric and <= 0 by construction
  /// (the recovery weights are chosen so this equals -r(v)^T A^{-1} r(u)).
  double lumped_pairing(const NodalField& u, const NodalField& v) const;

  const Mesh& padded_mesh() const { return embedding_.padded; }

 private:
  Eigen::VectorXd solve_potential(const NodalField& m) const;

  const Mesh& mesh_;
  StrayFieldBackend backend_;
  PaddedEmbedding embedding_;
  Eigen::SparseMatrix<double> A_;     // padded stiffness, boundary rows dropped
  std::vector<int> interior_index_;   // padded vertex -> row of A_ (-1 on bdry)
  std::vector<int> interior_vertex_;  // row of A_ -> padded vertex
  mutable Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                   Eigen::Lower | Eigen::Upper,
                                   Eigen::IncompleteCholesky<double>>
      cg_;
  Eigen::VectorXd sample_weight_;     // per sample vertex: sum vol/4 over its
                                      // incident magnet tets (recovery weights)
};

/// Split of the effective field used by the steppers and diagnostics.
struct EffectiveField {
  NodalField exchange;     // d^2 * (discrete Laplacian of m)
  NodalField lower_order;  // stray + applied + anisotropy
  NodalField total;        // exchange + lower_order
};

struct EnergyBreakdown {
  double exchange = 0.0;   //  (d^2/2) |grad m|^2
  double stray = 0.0;      // -(1/2) <H_d(m), m>
  double zeeman = 0.0;     // -<H_ext, m>
  double aniso = 0.0;      // -(Q/2) int (e.m)^2
  double total = 0.0;
};

class FieldEvaluator {
 public:
  FieldEvaluator(const Mesh& mesh, const P1Operators& ops,
                 const MaterialParams& mat, const StrayFieldBackend& backend);

  EffectiveField evaluate(const NodalField& m) const;
  NodalField exchange(const NodalField& m) const;
  NodalField lower_order(const NodalField& m) const;
  NodalField stray(const NodalField& m) const;

  EnergyBreakdown energy(const NodalField& m) const;

  bool has_stray() const { return stray_ != nullptr; }
  const StrayFieldSolver& stray_solver() const;

  const MaterialParams& material() const { return mat_; }
  const P1Operators& operators() const { return ops_; }
  const Mesh& mesh() const { return mesh_; }

 private:
  const Mesh& mesh_;
  const P1Operators& ops_;
  MaterialParams mat_;
  std::unique_ptr<StrayFieldSolver> stray_;
};

/// Clipped mass coefficient used by the second-order stepper:
///   x >= 0 : alpha + (tau/2) min(x, M)
///   x <  0 : alpha / (1 + (tau/2) min(-x, M))
double cutoff_coefficient(double x, double alpha, double tau, double M);

/// cutoff_coefficient applied to x_i = H_i . m_i at every vertex.
Eigen::VectorXd cutoff_coefficients(const NodalField& m, const NodalField& H,
                                    double alpha, double tau, double M);

}  // namespace llgfem
