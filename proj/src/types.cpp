#include "llgfem/types.hpp"

#include <random>

namespace llgfem {

NodalField uniform_field(Eigen::Index n, const Vec3& value) {
  NodalField f(n, 3);
  f.rowwise() = value.transpose();
  return f;
}

namespace {

double next_unit(std::mt19937_64& gen) {
  // 53 uniform bits in [0,1); independent of libstdc++'s distribution
  // internals so streams are reproducible across standard libraries.
  return static_cast<double>(gen() >> 11) * 0x1p-53;
}

Vec3 next_direction(std::mt19937_64& gen) {
  // Rejection sampling in the unit ball, then normalize.
  for (;;) {
    Vec3 p(2.0 * next_unit(gen) - 1.0, 2.0 * next_unit(gen) - 1.0,
           2.0 * next_unit(gen) - 1.0);
    const double n2 = p.squaredNorm();
    if (n2 > 1e-12 && n2 <= 1.0) return p / std::sqrt(n2);
  }
}

}  // namespace

NodalField random_unit_field(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  NodalField f(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) f.row(i) = next_direction(gen);
  return f;
}

NodalField random_shell_field(Eigen::Index n, std::uint64_t seed, double rmin,
                              double rmax) {
  std::mt19937_64 gen(seed);
  NodalField f(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = rmin + (rmax - rmin) * next_unit(gen);
    f.row(i) = r * next_direction(gen);
  }
  return f;
}

}  // namespace llgfem
