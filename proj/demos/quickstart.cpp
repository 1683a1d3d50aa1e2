// Minimal tour of the library: the 1D Kac law, sampling, and the conditional
// velocity field in 2D.

#include <cstdio>

#include "kacflow/fields.hpp"
#include "kacflow/kac1d.hpp"
#include "kacflow/process.hpp"

int main() {
  using namespace kacflow;
  const KacParams p(25.0, 5.0);
  const double t = 0.2;

  std::printf("atom weight at +-%.2f: %.6g\n", p.c * t, kac1d::atom_weight(p, t));
  for (double x : {0.0, 0.5, 0.9}) {
    std::printf("x=%.2f  u=%.6g  v=%.6g\n", x, kac1d::density_cont(p, t, x), kac1d::velocity(p, t, x));
  }

  RngStream rng(7, 0);
  const auto draws = sample_kac(p, t, 5, rng);
  std::printf("samples:");
  for (double d : draws) std::printf(" %.4f", d);
  std::printf("\n");

  const Point v = kac_cond_velocity(p, t, {0.3, -0.2}, {0.0, 0.0});
  std::printf("conditional velocity at (0.3, -0.2): (%.4f, %.4f)\n", v[0], v[1]);
  return 0;
}
