#include "llgfem/fem.hpp"

#include <cmath>
#include <vector>

namespace llgfem {

P1Gradients p1_gradients(const std::array<Vec3, 4>& verts) {
  const Vec3 e1 = verts[1] - verts[0];
  const Vec3 e2 = verts[2] - verts[0];
  const Vec3 e3 = verts[3] - verts[0];
  const double det = e1.cross(e2).dot(e3);
  if (!(det > 0.0))
    throw Error("degenerate tet (signed volume " + std::to_string(det / 6.0) +
                ")");
  P1Gradients g;
  g.volume = det / 6.0;
  g.grad[1] = e2.cross(e3) / det;
  g.grad[2] = e3.cross(e1) / det;
  g.grad[3] = e1.cross(e2) / det;
  g.grad[0] = -(g.grad[1] + g.grad[2] + g.grad[3]);
  return g;
}

namespace {

P1Gradients tet_gradients(const Mesh& mesh, const std::array<int, 4>& t) {
  return p1_gradients({mesh.vertices[t[0]], mesh.vertices[t[1]],
                       mesh.vertices[t[2]], mesh.vertices[t[3]]});
}

}  // namespace

StiffnessOperator assemble_stiffness(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.tets.size() * 16);
  for (const auto& t : mesh.tets) {
    const P1Gradients g = tet_gradients(mesh, t);
    for (int a = 0; a < 4; ++a) {
      trip.emplace_back(t[a], t[a], g.volume * g.grad[a].squaredNorm());
      for (int b = a + 1; b < 4; ++b) {
        // One dot product per unordered pair, emitted to both triangles in
        // the same order, so the assembled matrix is bitwise symmetric.
        const double kab = g.volume * g.grad[a].dot(g.grad[b]);
        trip.emplace_back(t[a], t[b], kab);
        trip.emplace_back(t[b], t[a], kab);
      }
    }
  }
  StiffnessOperator op;
  op.K.resize(mesh.num_vertices(), mesh.num_vertices());
  op.K.setFromTriplets(trip.begin(), trip.end());
  op.K.makeCompressed();
  return op;
}

LumpedMass assemble_lumped_mass(const Mesh& mesh) {
  LumpedMass mass;
  mass.weights = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (const auto& t : mesh.tets) {
    const double q = tet_gradients(mesh, t).volume / 4.0;
    for (int v : t) mass.weights[v] += q;
  }
  mass.total = mass.weights.sum();
  return mass;
}

P1Operators assemble_operators(const Mesh& mesh) {
  return {assemble_stiffness(mesh), assemble_lumped_mass(mesh)};
}

NodalField interpolate_nodal(const Mesh& mesh,
                             const std::function<Vec3(const Vec3&)>& f) {
  NodalField u(mesh.num_vertices(), 3);
  for (int i = 0; i < mesh.num_vertices(); ++i)
    u.row(i) = f(mesh.vertices[i]).transpose();
  return u;
}

FieldNorms norms(const Mesh& mesh, const NodalField& u) {
  FieldNorms out;
  double l2sq = 0.0, h1sq = 0.0;
  for (const auto& t : mesh.tets) {
    const P1Gradients g = tet_gradients(mesh, t);
    for (int c = 0; c < 3; ++c) {
      // Exact P1 mass on a tet: int phi_a phi_b = vol (1+delta_ab)/20.
      double sum = 0.0, sumsq = 0.0;
      Vec3 grad = Vec3::Zero();
      for (int a = 0; a < 4; ++a) {
        const double ua = u(t[a], c);
        sum += ua;
        sumsq += ua * ua;
        grad += ua * g.grad[a];
      }
      l2sq += g.volume / 20.0 * (sum * sum + sumsq);
      h1sq += g.volume * grad.squaredNorm();
    }
  }
  out.l2 = std::sqrt(l2sq);
  out.h1_semi = std::sqrt(h1sq);
  out.linf_nodal = u.rowwise().norm().maxCoeff();
  return out;
}

double lumped_dot(const LumpedMass& mass, const NodalField& u,
                  const NodalField& v) {
  return (u.array() * v.array()).rowwise().sum().matrix().dot(mass.weights);
}

NodalField cross_field(const NodalField& u, const NodalField& v) {
  NodalField c(u.rows(), 3);
  c.col(0) = u.col(1).cwiseProduct(v.col(2)) - u.col(2).cwiseProduct(v.col(1));
  c.col(1) = u.col(2).cwiseProduct(v.col(0)) - u.col(0).cwiseProduct(v.col(2));
  c.col(2) = u.col(0).cwiseProduct(v.col(1)) - u.col(1).cwiseProduct(v.col(0));
  return c;
}

}  // namespace llgfem
