#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace llgfem {

struct KrylovStats {
  int iterations = 0;
  double residual = 0.0;  // relative, ||r|| / ||b||
  bool converged = false;
};

/// Matrix-free preconditioned BiCGStab for the (nonsymmetric) tangent-plane
/// systems.  `apply(x)` returns A*x; `precond(r)` approximates A^{-1} r (pass
/// the identity for an unpreconditioned solve).  Convergence test is
/// ||b - A x|| <= tol * ||b|| with the recursively updated residual.
template <class Apply, class Precond>
KrylovStats bicgstab(const Apply& apply, const Precond& precond,
                     const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                     int max_iterations) {
  KrylovStats stats;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    stats.converged = true;
    return stats;
  }
  if (x.size() != b.size()) x = Eigen::VectorXd::Zero(b.size());

  Eigen::VectorXd r = b - apply(x);
  Eigen::VectorXd r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd phat, shat, s, t;

  stats.residual = r.norm() / bnorm;
  if (stats.residual <= tol) {
    stats.converged = true;
    return stats;
  }

  for (int it = 1; it <= max_iterations; ++it) {
    const double rho_next = r0.dot(r);
    if (rho_next == 0.0) break;  // breakdown
    if (it == 1) {
      p = r;
    } else {
      const double beta = (rho_next / rho) * (alpha / omega);
      p = r + beta * (p - omega * v);
    }
    rho = rho_next;

    phat = precond(p);
    v = apply(phat);
    const double r0v = r0.dot(v);
    if (r0v == 0.0) break;
    alpha = rho / r0v;
    s = r - alpha * v;

    stats.iterations = it;
    if (s.norm() / bnorm <= tol) {
      x += alpha * phat;
      stats.residual = s.norm() / bnorm;
      stats.converged = true;
      return stats;
    }

    shat = precond(s);
    t = apply(shat);
    const double tt = t.squaredNorm();
    if (tt == 0.0) break;
    omega = t.dot(s) / tt;
    x += alpha * phat + omega * shat;
    r = s - omega * t;

    stats.residual = r.norm() / bnorm;
    if (stats.residual <= tol) {
      stats.converged = true;
      return stats;
    }
    if (omega == 0.0) break;
  }
  return stats;
}

}  // namespace llgfem
