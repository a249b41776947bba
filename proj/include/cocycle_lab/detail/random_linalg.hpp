#pragma once

#include <random>

namespace cocycle_lab {

template <class Rng>
Vec random_unit_vector(int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec u(n);
  do {
    for (int i = 0; i < n; ++i) u(i) = gauss(rng);
  } while (u.norm() < 1e-12);
  return u / u.norm();
}

template <class Rng>
Subspace random_subspace(int ambient, int dim, Rng& rng) {
  if (dim == 0) return Subspace::zero(ambient);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(ambient, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < ambient; ++r) g(r, c) = gauss(rng);
  return Subspace::span(g);
}

}  // namespace cocycle_lab
