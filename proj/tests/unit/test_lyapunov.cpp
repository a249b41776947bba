#include <doctest.h>

#include <random>

#include "cocycle_lab/lyapunov.hpp"
#include "support.hpp"

using namespace cocycle_lab;

namespace {

SkewProduct cat_skew(double c = 0.1) {
  IntMatrix2 m;
  m << 2, 1, 1, 1;
  return SkewProduct(TorusAutomorphism(m), TrigPoly({{c, {1, 0, 0}, true}}));
}

CocycleField constant(const Mat& m) { return CocycleField(static_cast<int>(m.rows()) / 2, 1.0, {ConstFactor{m, ""}}); }

Mat diag(double a) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = 1.0 / a;
  return m;
}

}  // namespace

TEST_CASE("constant cocycles give log eigenvalue moduli") {
  LyapunovOptions o;
  o.n = 5000;
  o.orbits = 3;
  o.seed = 1;
  const auto r = lyapunov_spectrum(SkewCocycle(constant(diag(2.0)), cat_skew()), o);
  CHECK(r.exponents[0] == doctest::Approx(std::log(2.0)).epsilon(1e-3));
  CHECK(r.exponents[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-3));
  Mat c(2, 2);
  c << 2, 1, 1, 1;
  const auto rc = lyapunov_spectrum(SkewCocycle(constant(c), cat_skew()), o);
  // largest eigenvalue of [[2,1],[1,1]] from its characteristic polynomial
  const double mu = (3.0 + std::sqrt(5.0)) / 2.0;
  CHECK(rc.top() == doctest::Approx(std::log(mu)).epsilon(1e-3));
  CHECK(rc.symmetry_defect < 1e-9);
  CHECK(r.measure.find("lebesgue") != std::string::npos);
}

TEST_CASE("rotation cocycles have zero exponents") {
  Mat j(2, 2);
  j << 0, 1, -1, 0;
  const CocycleField a(1, 1.0, {ExpFactor{2 * M_PI * j, TrigPoly(), {1, 0, 0}}});
  LyapunovOptions o;
  o.n = 5000;
  o.orbits = 4;
  const auto r = lyapunov_spectrum(SkewCocycle(a, cat_skew()), o);
  CHECK(std::abs(r.top()) < 1e-9);
}

TEST_CASE("results do not depend on the number of workers") {
  std::mt19937_64 rng(3);
  const CocycleField a = random_cocycle(2, 2, 2, 0.7, rng);
  LyapunovOptions o;
  o.n = 3000;
  o.orbits = 6;
  o.seed = 77;
  const auto one = lyapunov_spectrum(SkewCocycle(a, cat_skew()), o);
  o.jobs = 4;
  const auto four = lyapunov_spectrum(SkewCocycle(a, cat_skew()), o);
  CHECK(one.exponents == four.exponents);
  CHECK(one.stderr_ == four.stderr_);
  o.seed = 78;
  CHECK(lyapunov_spectrum(SkewCocycle(a, cat_skew()), o).exponents != one.exponents);
}

TEST_CASE("spectra are symmetric for symplectic cocycles") {
  std::mt19937_64 rng(5);
  const CocycleField a = random_cocycle(2, 3, 2, 0.8, rng);
  LyapunovOptions o;
  o.n = 20000;
  o.orbits = 8;
  o.seed = 9;
  const auto r = lyapunov_spectrum(SkewCocycle(a, cat_skew()), o);
  REQUIRE(r.exponents.size() == 4);
  CHECK(std::is_sorted(r.exponents.rbegin(), r.exponents.rend()));
  for (int i = 0; i < 2; ++i) CHECK(std::abs(r.exponents[i] + r.exponents[3 - i]) <= 3.0 * r.max_stderr() + 1e-12);
  CHECK(r.reortho_interval == 1);
  CHECK(r.per_orbit.size() == 8);
}

TEST_CASE("orbit exponents with a fixed frame") {
  const auto c = SkewCocycle(constant(diag(3.0)), cat_skew());
  const auto e = orbit_exponents(c, Point{{0.1, 0.2}, 0.0}, Mat::Identity(2, 2), 100, 0, 1);
  CHECK(e[0] == doctest::Approx(std::log(3.0)));
  // reorthonormalizing less often changes nothing for a constant diagonal cocycle
  const auto e5 = orbit_exponents(c, Point{{0.1, 0.2}, 0.0}, Mat::Identity(2, 2), 100, 0, 5);
  CHECK(e5[0] == doctest::Approx(std::log(3.0)));
}

TEST_CASE("Oseledets frame of a constant hyperbolic cocycle") {
  const auto c = SkewCocycle(constant(diag(2.0)), cat_skew());
  const auto fr = oseledets_frame(c, Point{{0.3, 0.4}, 0.5});
  const std::vector<int> e1{0}, e2{1};
  CHECK(subspace_angle(fr.unstable, Subspace::coordinate(2, e1)) < 1e-8);
  CHECK(subspace_angle(fr.stable, Subspace::coordinate(2, e2)) < 1e-8);
  CHECK(fr.converged);
  CHECK_FALSE(fr.degenerate);
  CHECK(fr.finite_time_gap == doctest::Approx(std::log(2.0)).epsilon(2e-2));  // O(1/n) bias
}

TEST_CASE("Oseledets frames are equivariant for a varying cocycle") {
  Mat h(2, 2);
  h << 0.0, 0.5, 0.5, 0.0;
  Mat j(2, 2);
  j << 0, 1, -1, 0;
  const CocycleField a(1, 1.0,
                       {ExpFactor{hamiltonian_from_symmetric(h), TrigPoly::constant(1.0)},
                        ExpFactor{j, TrigPoly({{0.3, {1, 0, 0}, true}, {0.2, {0, 1, 1}, false}})}});
  const auto c = SkewCocycle(a, cat_skew());
  const auto fr = oseledets_frame(c, Point{{0.31, 0.47}, 0.2});
  CHECK(fr.converged);
  CHECK(fr.equivariance_residual < 1e-6);
  CHECK(fr.convergence_residual < 1e-6);
  CHECK(subspace_angle(fr.unstable, fr.stable) > 1e-3);
}

TEST_CASE("identity cocycle has a degenerate frame") {
  const auto c = SkewCocycle(CocycleField(1, 1.0), cat_skew());
  const auto fr = oseledets_frame(c, Point{{0.3, 0.4}, 0.5});
  CHECK(fr.degenerate);
}
