#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace llgfem {

using Vec3 = Eigen::Vector3d;

/// One 3-vector per mesh vertex, stored row-wise (row i = value at vertex i).
using NodalField = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear-solver failure, carries the state at the point of giving up.
struct SolveError : Error {
  SolveError(const std::string& what, int iterations_, double residual_)
      : Error(what + " (iterations=" + std::to_string(iterations_) +
              ", residual=" + std::to_string(residual_) + ")"),
        iterations(iterations_),
        residual(residual_) {}
  int iterations;
  double residual;
};

NodalField uniform_field(Eigen::Index n, const Vec3& value);

/// Random nodal unit vectors from a pinned 64-bit stream; the same seed
/// reproduces the same field on any platform.
NodalField random_unit_field(Eigen::Index n, std::uint64_t seed);

/// Random nodal vectors with norms drawn uniformly from [rmin, rmax].
NodalField random_shell_field(Eigen::Index n, std::uint64_t seed, double rmin,
                              double rmax);

}  // namespace llgfem
