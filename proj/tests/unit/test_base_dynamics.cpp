#include <doctest.h>

#include <set>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cocycle_lab/base_dynamics.hpp"
#include "cocycle_lab/errors.hpp"

using namespace cocycle_lab;
using mp = boost::multiprecision::cpp_bin_float_50;

namespace {

IntMatrix2 int_matrix(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  IntMatrix2 m;
  m << a, b, c, d;
  return m;
}

const IntMatrix2 kCat = int_matrix(2, 1, 1, 1);

TrigPoly sample_theta() {
  return TrigPoly({{0.1, {1, 0, 0}, true}, {0.04, {1, 1, 0}, false}, {0.02, {0, 2, 0}, true}});
}

mp theta_mp(const TrigPoly& th, const mp& x1, const mp& x2) {
  const mp two_pi = 2 * boost::math::constants::pi<mp>();
  mp s = 0;
  for (const auto& t : th.terms()) {
    const mp ph = two_pi * (t.k[0] * x1 + t.k[1] * x2);
    s += t.coef * (t.is_sin ? sin(ph) : cos(ph));
  }
  return s;
}

// Brute-force center shift in 50 digits from x = (i/N, j/N).
mp center_shift_oracle(const IntMatrix2& m, const TrigPoly& th, std::int64_t i, std::int64_t j,
                       std::int64_t den, double coef, const Eigen::Vector2d& dir_hint, bool stable) {
  const mp a = double(m(0, 0)), b = double(m(0, 1)), c = double(m(1, 0)), d = double(m(1, 1));
  const mp tr = a + d, det = a * d - b * c;
  const mp disc = sqrt(tr * tr - 4 * det);
  mp mu1 = (tr + disc) / 2, mu2 = (tr - disc) / 2;
  if (abs(mu1) < abs(mu2)) std::swap(mu1, mu2);
  const mp mu = stable ? mu2 : mu1;
  mp e1 = b, e2 = mu - a;
  const mp nrm = sqrt(e1 * e1 + e2 * e2);
  e1 /= nrm;
  e2 /= nrm;
  if (e1 * dir_hint(0) + e2 * dir_hint(1) < 0) {
    e1 = -e1;
    e2 = -e2;
  }
  // inverse of an integer matrix with det +-1
  const mp ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
  mp x1 = mp(i) / den, x2 = mp(j) / den, scale = coef, sum = 0;
  for (int n = 0; n < 120; ++n) {
    if (stable) {
      sum += theta_mp(th, x1, x2) - theta_mp(th, x1 + scale * e1, x2 + scale * e2);
      const mp y1 = a * x1 + b * x2, y2 = c * x1 + d * x2;
      x1 = y1 - floor(y1);
      x2 = y2 - floor(y2);
      scale *= mu;
    } else {
      const mp y1 = ia * x1 + ib * x2, y2 = ic * x1 + id * x2;
      x1 = y1 - floor(y1);
      x2 = y2 - floor(y2);
      scale /= mu;
      sum -= theta_mp(th, x1, x2) - theta_mp(th, x1 + scale * e1, x2 + scale * e2);
    }
  }
  return sum;
}

std::int64_t brute_periodic_count(const IntMatrix2& m, int n, std::int64_t& den) {
  IntMatrix2 p = IntMatrix2::Identity();
  for (int k = 0; k < n; ++k) p = p * m;
  p -= IntMatrix2::Identity();
  den = std::llabs(p(0, 0) * p(1, 1) - p(0, 1) * p(1, 0));
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < den; ++i)
    for (std::int64_t j = 0; j < den; ++j)
      if ((p(0, 0) * i + p(0, 1) * j) % den == 0 && (p(1, 0) * i + p(1, 1) * j) % den == 0) ++count;
  return count;
}

}  // namespace

TEST_CASE("torus helpers") {
  CHECK(wrap_unit(-0.25) == doctest::Approx(0.75));
  CHECK(wrap_unit(3.5) == doctest::Approx(0.5));
  CHECK(wrap_centered(0.75) == doctest::Approx(-0.25));
  CHECK(torus_distance({0.95, 0.0}, {0.05, 0.0}) == doctest::Approx(0.1));
  CHECK(torus_displacement({0.95, 0.5}, {0.05, 0.45})(0) == doctest::Approx(0.1));
  CHECK(point_distance({{0, 0}, 0.9}, {{0, 0}, 0.1}) == doctest::Approx(0.2));
}

TEST_CASE("hyperbolic automorphism data") {
  const TorusAutomorphism g(kCat);
  const double phi2 = (3.0 + std::sqrt(5.0)) / 2.0;
  CHECK(g.mu_u() == doctest::Approx(phi2));
  CHECK(g.mu_s() == doctest::Approx(1.0 / phi2));
  Eigen::Matrix2d md;
  md << 2, 1, 1, 1;
  CHECK((md * g.e_u() - g.mu_u() * g.e_u()).norm() < 1e-14);
  CHECK((md * g.e_s() - g.mu_s() * g.e_s()).norm() < 1e-14);
  CHECK(g.e_u().norm() == doctest::Approx(1.0));
  const Eigen::Vector2d x{0.3, 0.8};
  CHECK(torus_distance(g.apply_inverse(g.apply(x)), x) < 1e-14);
  CHECK(torus_distance(g.iterate(x, 5), g.apply(g.apply(g.apply(g.apply(g.apply(x)))))) < 1e-12);
  const Eigen::Vector2d ab = g.eigen_coordinates({0.01, -0.02});
  CHECK((ab(0) * g.e_u() + ab(1) * g.e_s() - Eigen::Vector2d(0.01, -0.02)).norm() < 1e-15);
}

TEST_CASE("non-hyperbolic or non-invertible matrices are rejected") {
  CHECK_THROWS_AS(TorusAutomorphism(int_matrix(1, 1, 0, 1)), InvalidArgument);
  CHECK_THROWS_AS(TorusAutomorphism(int_matrix(2, 0, 0, 1)), InvalidArgument);
  CHECK_THROWS_AS(TorusAutomorphism(int_matrix(0, 1, -1, 0)), InvalidArgument);
  CHECK_NOTHROW(TorusAutomorphism(int_matrix(3, 1, 1, 0)));  // det -1
}

TEST_CASE("bracket lies on both local manifolds") {
  const TorusAutomorphism g(kCat);
  const Eigen::Vector2d x{0.2, 0.3}, y{0.21, 0.305};
  const Eigen::Vector2d w = g.bracket(x, y);
  const Eigen::Vector2d ds = g.eigen_coordinates(torus_displacement(x, w));
  const Eigen::Vector2d du = g.eigen_coordinates(torus_displacement(y, w));
  CHECK(std::abs(ds(0)) < 1e-14);
  CHECK(std::abs(du(1)) < 1e-14);
  CHECK_THROWS(g.bracket(x, Eigen::Vector2d(0.7, 0.8)));
}

TEST_CASE("periodic point counts match brute force") {
  for (const auto& m : {kCat, int_matrix(3, 1, 2, 1), int_matrix(3, 1, 1, 0)}) {
    const TorusAutomorphism g(m);
    for (int n = 1; n <= 4; ++n) {
      std::int64_t den = 0;
      const auto expected = brute_periodic_count(m, n, den);
      CHECK(expected == den);
      const auto pts = periodic_base_points(g, n);
      CHECK(static_cast<std::int64_t>(pts.size()) == expected);
      std::set<std::pair<std::int64_t, std::int64_t>> seen;
      for (const auto& p : pts) {
        RationalPoint q = p;
        for (int k = 0; k < n; ++k) q = apply_exact(g, q);
        CHECK(q == p);
        // every periodic point has coordinates in (1/den) Z^2
        CHECK((p.num1 * den) % p.den == 0);
        CHECK((p.num2 * den) % p.den == 0);
        seen.insert({p.num1 * den / p.den, p.num2 * den / p.den});
      }
      CHECK(seen.size() == pts.size());
      CHECK(std::is_sorted(pts.begin(), pts.end()));
    }
  }
}

TEST_CASE("checked power detects overflow") {
  CHECK(checked_power(kCat, 3)(0, 0) == 13);
  CHECK_THROWS_AS(checked_power(kCat, 200), InvalidArgument);
}

TEST_CASE("leaf selection") {
  const SkewProduct f(TorusAutomorphism(kCat), TrigPoly({{0.1, {1, 0, 0}, true}}));
  const auto fixed = select_leaf(f, 1, 0);
  CHECK(fixed.period == 1);
  CHECK(fixed.base == RationalPoint{0, 0, 1});
  CHECK_FALSE(fixed.irrational);  // theta(0) = 0
  CHECK(fixed.rational_den == 1);
  // 5 points of period dividing 2, one of them fixed: 4 of minimal period 2.
  for (int i = 0; i < 4; ++i) CHECK(select_leaf(f, 2, i).orbit.size() == 2);
  CHECK_THROWS(select_leaf(f, 2, 4));
  const auto l2 = select_leaf(f, 2, 0);
  double rot = 0.0;
  for (const auto& q : l2.orbit) rot += f.theta()(q.to_vector());
  CHECK(std::abs(wrap_centered(rot - l2.rotation)) < 1e-12);

  // theta(0) = 1/3 exactly representable as a rational rotation
  const SkewProduct f3(TorusAutomorphism(kCat), TrigPoly::constant(1.0 / 3.0));
  const auto l3 = select_leaf(f3, 1, 0);
  CHECK_FALSE(l3.irrational);
  CHECK(l3.rational_den == 3);
  CHECK(l3.fiber_return_time() == 3);
  const SkewProduct fi(TorusAutomorphism(kCat), TrigPoly::constant((std::sqrt(5.0) - 1.0) / 2.0));
  CHECK(select_leaf(fi, 1, 0).irrational);
}

TEST_CASE("skew product steps") {
  const SkewProduct f(TorusAutomorphism(kCat), sample_theta());
  const Point p{{0.3, 0.6}, 0.25};
  const Point q = f.step(p);
  CHECK(q.t == doctest::Approx(wrap_unit(0.25 + f.theta()(p.x))));
  const Point back = f.step_back(q);
  CHECK(point_distance(back, p) < 1e-14);
  CHECK(point_distance(f.iterate(f.iterate(p, 7), -7), p) < 1e-9);
}

TEST_CASE("homoclinic points") {
  const TorusAutomorphism g(kCat);
  const Eigen::Vector2d p{0.0, 0.0};
  std::vector<Eigen::Vector2d> zs;
  for (int idx = 0; idx < 3; ++idx) {
    const auto h = find_homoclinic(g, p, idx);
    CHECK(torus_distance(wrap_torus(p + h.coef_u * g.e_u()), h.z) < 1e-12);
    CHECK(torus_distance(wrap_torus(p + h.coef_s * g.e_s()), h.z) < 1e-12);
    CHECK(torus_distance(h.z, p) > 0.1);
    CHECK(torus_distance(homoclinic_orbit(g, h, 30), p) < 1e-10);
    CHECK(torus_distance(homoclinic_orbit(g, h, -30), p) < 1e-10);
    CHECK(torus_distance(homoclinic_orbit(g, h, 1), g.apply(h.z)) < 1e-12);
    zs.push_back(h.z);
  }
  // distinct orbits
  const auto h0 = find_homoclinic(g, p, 0);
  for (int n = -12; n <= 12; ++n) {
    CHECK(torus_distance(homoclinic_orbit(g, h0, n), zs[1]) > 1e-6);
    CHECK(torus_distance(homoclinic_orbit(g, h0, n), zs[2]) > 1e-6);
  }
  CHECK_THROWS_AS(find_homoclinic(g, Eigen::Vector2d(0.3, 0.1), 0), InvalidArgument);
}

TEST_CASE("center holonomy shifts agree with a 50-digit brute-force sum") {
  const IntMatrix2 m = kCat;
  const SkewProduct f(TorusAutomorphism(m), sample_theta());
  const auto& g = f.base();
  const std::int64_t den = 97;
  int checked = 0;
  for (std::int64_t i = 3; i < den; i += 17)
    for (std::int64_t j = 5; j < den; j += 23)
      for (double coef : {0.08, -0.05, 0.01, 1e-5}) {
        const Eigen::Vector2d x{double(i) / den, double(j) / den};
        const double s = center_shift_along(f, x, coef, LeafKind::Stable);
        const double u = center_shift_along(f, x, coef, LeafKind::Unstable);
        const double so = static_cast<double>(center_shift_oracle(m, f.theta(), i, j, den, coef, g.e_s(), true));
        const double uo = static_cast<double>(center_shift_oracle(m, f.theta(), i, j, den, coef, g.e_u(), false));
        CHECK(std::abs(s - so) < 1e-11);
        CHECK(std::abs(u - uo) < 1e-11);
        ++checked;
      }
  CHECK(checked > 50);
}

TEST_CASE("center holonomy makes fibers asymptotic") {
  const SkewProduct f(TorusAutomorphism(kCat), sample_theta());
  const auto& g = f.base();
  const Eigen::Vector2d x{0.41, 0.17};
  const double coef = 0.07;
  const Point p{x, 0.3};
  const Point q{wrap_torus(x + coef * g.e_s()), wrap_unit(0.3 + center_shift_along(f, x, coef, LeafKind::Stable))};
  Point a = p, b = q;
  for (int n = 0; n < 20; ++n) {
    a = f.step(a);
    b = f.step(b);
  }
  CHECK(point_distance(a, b) < 1e-6);
  // and the two-point form agrees
  CHECK(center_holonomy_shift(f, x, q.x, LeafKind::Stable) ==
        doctest::Approx(center_shift_along(f, x, coef, LeafKind::Stable)).epsilon(1e-12));
  CHECK_THROWS(center_holonomy_shift(f, x, Eigen::Vector2d(0.9, 0.9), LeafKind::Stable));
  // constant theta: shifts vanish
  const SkewProduct f0(TorusAutomorphism(kCat), TrigPoly::constant(0.3));
  CHECK(center_shift_along(f0, x, coef, LeafKind::Stable) == 0.0);
}
