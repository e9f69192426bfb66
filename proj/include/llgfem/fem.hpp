#pragma once

#include "llgfem/mesh.hpp"
#include "llgfem/types.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>

namespace llgfem {

/// Constant gradients of the four barycentric basis functions on one tet.
struct P1Gradients {
  std::array<Vec3, 4> grad;
  double volume = 0.0;
};

/// Throws Error on non-positive signed volume.
P1Gradients p1_gradients(const std::array<Vec3, 4>& verts);

/// Scalar P1 stiffness K_ij = sum_T vol * grad(phi_i).grad(phi_j), stored once
/// and applied blockwise to each of the 3 field components.
struct StiffnessOperator {
  Eigen::SparseMatrix<double> K;

  NodalField apply(const NodalField& u) const {
    NodalField out(u.rows(), 3);
    for (int c = 0; c < 3; ++c) out.col(c) = K * u.col(c);
    return out;
  }
  Eigen::VectorXd diagonal() const { return K.diagonal(); }
};

StiffnessOperator assemble_stiffness(const Mesh& mesh);

/// Vertex (lumped) quadrature weights V_i = sum_{tets at i} vol/4.
struct LumpedMass {
  Eigen::VectorXd weights;
  double total = 0.0;  // == |Omega|
};

LumpedMass assemble_lumped_mass(const Mesh& mesh);

/// The assembled pair used by field evaluation and the time steppers.
struct P1Operators {
  StiffnessOperator stiffness;
  LumpedMass mass;
};

P1Operators assemble_operators(const Mesh& mesh);

/// Nodal interpolation: values_i = f(x_i).
NodalField interpolate_nodal(const Mesh& mesh,
                             const std::function<Vec3(const Vec3&)>& f);

struct FieldNorms {
  double l2 = 0.0;        // exact P1 mass integration
  double h1_semi = 0.0;   // sqrt(sum_c u_c^T K u_c), accumulated per tet
  double linf_nodal = 0.0;
};

FieldNorms norms(const Mesh& mesh, const NodalField& u);

/// Lumped L2 inner product sum_i V_i u_i.v_i.
double lumped_dot(const LumpedMass& mass, const NodalField& u,
                  const NodalField& v);

/// Row-wise cross product (the nodal interpolant of u x v).
NodalField cross_field(const NodalField& u, const NodalField& v);

}  // namespace llgfem
