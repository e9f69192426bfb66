#include "llgfem/field.hpp"

#include <cmath>
#include <vector>

namespace llgfem {

void MaterialParams::validate() const {
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  if (!(d2 >= 0.0)) throw Error("d2 must be nonnegative");
  if (!(Q >= 0.0)) throw Error("Q must be nonnegative");
  if (std::abs(e_axis.norm() - 1.0) > 1e-12)
    throw Error("easy axis must be a unit vector");
  if (!H_ext.allFinite()) throw Error("applied field must be finite");
}

StrayFieldBackend::Mode parse_stray_mode(const std::string& s) {
  if (s == "none") return StrayFieldBackend::Mode::none;
  if (s == "truncated_fem") return StrayFieldBackend::Mode::truncated_fem;
  throw Error("unknown stray-field mode '" + s + "'");
}

StrayFieldSolver::StrayFieldSolver(const Mesh& mesh,
                                   const StrayFieldBackend& backend)
    : mesh_(mesh),
      backend_(backend),
      embedding_(embed_in_padded_box(mesh, backend.padding_factor)) {
  if (backend.mode != StrayFieldBackend::Mode::truncated_fem)
    throw Error("stray-field solver constructed with mode none");
  if (backend.padding_factor < 2.0)
    throw Error("stray-field padding factor must be >= 2");

  const Mesh& pad = embedding_.padded;
  std::vector<char> on_boundary(pad.num_vertices(), 0);
  for (const auto& f : pad.boundary_faces())
    for (int v : f) on_boundary[v] = 1;

  interior_index_.assign(pad.num_vertices(), -1);
  for (int v = 0; v < pad.num_vertices(); ++v)
    if (!on_boundary[v]) {
      interior_index_[v] = static_cast<int>(interior_vertex_.size());
      interior_vertex_.push_back(v);
    }

  const StiffnessOperator kp = assemble_stiffness(pad);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(kp.K.nonZeros());
  for (int col = 0; col < kp.K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(kp.K, col); it; ++it) {
      const int r = interior_index_[it.row()];
      const int c = interior_index_[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  const int n = static_cast<int>(interior_vertex_.size());
  A_.resize(n, n);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();

  cg_.setTolerance(backend.tol);
  cg_.setMaxIterations(backend.max_iterations);
  cg_.compute(A_);
  if (cg_.info() != Eigen::Success)
    throw Error("stray-field solver setup failed (factorization)");

  sample_weight_ = assemble_lumped_mass(mesh).weights;
}

Eigen::VectorXd StrayFieldSolver::solve_potential(const NodalField& m) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(A_.rows());
  for (const auto& t : mesh_.tets) {
    const P1Gradients g = p1_gradients(
        {mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]],
         mesh_.vertices[t[3]]});
    const Vec3 mbar =
        0.25 * (m.row(t[0]) + m.row(t[1]) + m.row(t[2]) + m.row(t[3]))
                   .transpose();
    for (int a = 0; a < 4; ++a) {
      const int r = interior_index_[embedding_.vertex_map[t[a]]];
      if (r >= 0) b[r] += g.volume * mbar.dot(g.grad[a]);
    }
  }
  Eigen::VectorXd u = cg_.solve(b);
  if (cg_.info() != Eigen::Success)
    throw SolveError("stray-field potential solve did not converge",
                     static_cast<int>(cg_.iterations()), cg_.error());
  return u;
}

NodalField StrayFieldSolver::evaluate(const NodalField& m) const {
  const Eigen::VectorXd u = solve_potential(m);
  NodalField H = NodalField::Zero(mesh_.num_vertices(), 3);
  for (const auto& t : mesh_.tets) {
    const P1Gradients g = p1_gradients(
        {mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]],
         mesh_.vertices[t[3]]});
    Vec3 gradu = Vec3::Zero();
    for (int a = 0; a < 4; ++a) {
      // Every vertex of a sample tet maps to a padded interior vertex.
      gradu += u[interior_index_[embedding_.vertex_map[t[a]]]] * g.grad[a];
    }
    const Vec3 contrib = -(g.volume / 4.0) * gradu;
    for (int a = 0; a < 4; ++a) H.row(t[a]) += contrib.transpose();
  }
  return sample_weight_.cwiseInverse().asDiagonal() * H;
}

double StrayFieldSolver::lumped_pairing(const NodalField& u,
                                        const NodalField& w) const {
  const NodalField hu = evaluate(u);
  return ((hu.array() * w.array()).rowwise().sum() *
          sample_weight_.array())
      .sum();
}

FieldEvaluator::FieldEvaluator(const Mesh& mesh, const P1Operators& ops,
                               const MaterialParams& mat,
                               const StrayFieldBackend& backend)
    : mesh_(mesh), ops_(ops), mat_(mat) {
  mat_.validate();
  if (backend.mode == StrayFieldBackend::Mode::truncated_fem)
    stray_ = std::make_unique<StrayFieldSolver>(mesh, backend);
}

NodalField FieldEvaluator::exchange(const NodalField& m) const {
  return ops_.mass.weights.cwiseInverse().asDiagonal() *
         (ops_.stiffness.apply(m) * (-mat_.d2));
}

NodalField FieldEvaluator::lower_order(const NodalField& m) const {
  NodalField H = stray_ ? stray_->evaluate(m)
                        : NodalField::Zero(m.rows(), 3);
  H.rowwise() += mat_.H_ext.transpose();
  if (mat_.Q != 0.0)
    H += mat_.Q * (m * mat_.e_axis) * mat_.e_axis.transpose();
  return H;
}

NodalField FieldEvaluator::stray(const NodalField& m) const {
  if (!stray_) return NodalField::Zero(m.rows(), 3);
  return stray_->evaluate(m);
}

EffectiveField FieldEvaluator::evaluate(const NodalField& m) const {
  EffectiveField f;
  f.exchange = exchange(m);
  f.lower_order = lower_order(m);
  f.total = f.exchange + f.lower_order;
  return f;
}

EnergyBreakdown FieldEvaluator::energy(const NodalField& m) const {
  EnergyBreakdown e;
  e.exchange = 0.5 * mat_.d2 *
               (m.array() * ops_.stiffness.apply(m).array()).sum();
  if (stray_) {
    const NodalField hd = stray_->evaluate(m);
    e.stray = -0.5 * lumped_dot(ops_.mass, hd, m);
  }
  e.zeeman = -ops_.mass.weights.dot(m * mat_.H_ext);
  if (mat_.Q != 0.0) {
    const Eigen::VectorXd s = m * mat_.e_axis;
    e.aniso = -0.5 * mat_.Q * ops_.mass.weights.dot(s.cwiseProduct(s));
  }
  e.total = e.exchange + e.stray + e.zeeman + e.aniso;
  return e;
}

const StrayFieldSolver& FieldEvaluator::stray_solver() const {
  if (!stray_) throw Error("stray-field backend is off");
  return *stray_;
}

double cutoff_coefficient(double x, double alpha, double tau, double M) {
  if (x >= 0.0) return alpha + 0.5 * tau * std::min(x, M);
  return alpha / (1.0 + 0.5 * tau * std::min(-x, M));
}

Eigen::VectorXd cutoff_coefficients(const NodalField& m, const NodalField& H,
                                    double alpha, double tau, double M) {
  Eigen::VectorXd phi(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    phi[i] = cutoff_coefficient(m.row(i).dot(H.row(i)), alpha, tau, M);
  return phi;
}

}  // namespace llgfem
