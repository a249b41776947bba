#include <doctest.h>

#include "cocycle_lab/diagnostics.hpp"
#include "cocycle_lab/errors.hpp"
#include "support.hpp"

using namespace cocycle_lab;

namespace {

SkewProduct cat_skew(TrigPoly theta = TrigPoly({{0.1, {1, 0, 0}, true}})) {
  IntMatrix2 m;
  m << 2, 1, 1, 1;
  return SkewProduct(TorusAutomorphism(m), std::move(theta));
}

CocycleField hyperbolic(double s = 0.4) {
  Mat h(2, 2);
  h << 0, s, s, 0;
  return CocycleField(1, 1.0, {ExpFactor{hamiltonian_from_symmetric(h), TrigPoly::constant(1.0)}});
}

Mat rot(double a) {
  Mat r(2, 2);
  r << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
  return r;
}

PinchingOptions quick_pinching() {
  PinchingOptions o;
  o.n = 4000;
  o.orbits = 4;
  o.t_grid = 128;
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("pinching on a rational leaf uses return-map eigenvalues") {
  const auto f = cat_skew();
  const auto leaf = select_leaf(f, 1, 0);
  const auto v = weak_pinching_test(hyperbolic(), f, leaf, quick_pinching());
  CHECK(v.method == "eigenvalue");
  CHECK(v.estimate == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(v.verdict == Verdict::Positive);
  CHECK(v.exponents.size() == 2);
  CHECK(v.gap_fractions[0] == doctest::Approx(1.0));
  const auto z = weak_pinching_test(CocycleField(1, 1.0), f, leaf, quick_pinching());
  CHECK(z.verdict == Verdict::Zero);
  // an elliptic rotation block is never pinching
  const auto r = weak_pinching_test(CocycleField(1, 1.0, {ConstFactor{rot(0.3), ""}}), f, leaf, quick_pinching());
  CHECK(r.verdict == Verdict::Zero);
}

TEST_CASE("pinching on an irrational leaf uses Lyapunov exponents") {
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const auto f = cat_skew(TrigPoly({{0.1, {1, 0, 0}, true}, {golden, {0, 0, 0}, false}}));
  const auto leaf = select_leaf(f, 1, 0);
  REQUIRE(leaf.irrational);
  const auto v = weak_pinching_test(hyperbolic(), f, leaf, quick_pinching());
  CHECK(v.method == "lyapunov");
  CHECK(v.estimate == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(v.verdict == Verdict::Positive);
  REQUIRE(v.spectrum.has_value());
  const auto z = weak_pinching_test(CocycleField(1, 1.0, {ConstFactor{rot(0.3), ""}}), f, leaf, quick_pinching());
  CHECK(z.verdict == Verdict::Zero);
}

TEST_CASE("twisting of constant and transvected hyperbolic cocycles") {
  const auto f = cat_skew();
  const auto a = hyperbolic();
  const auto cert = certify_fiber_bunching(a, f, 30, 6);
  REQUIRE(cert.pass);
  const auto loop = make_loop(f, select_leaf(f, 1, 0), 0);
  TwistingOptions o;
  o.samples = 16;
  o.seed = 5;
  const auto before = weak_twisting_test(a, f, cert, loop, o);
  CHECK(before.verdict == Verdict::Zero);
  for (double fr : before.fractions) CHECK(fr == 0.0);

  Vec v(2);
  v << 1, 1;
  const auto pert = transvection_perturbation(a, f, loop, {{v / v.norm(), 0.3}}, 0.05, 20);
  const auto cert2 = certify_fiber_bunching(pert.field, f, 30, 6);
  REQUIRE(cert2.pass);
  const auto after = weak_twisting_test(pert.field, f, cert2, loop, o);
  CHECK(after.verdict == Verdict::Positive);
  CHECK(after.j == 1);
  CHECK(after.fractions[0] >= 0.05);
  // the loop is exactly the transvection
  const auto lh = loop_holonomy(pert.field, f, cert2, loop, 0.4);
  const Mat sigma = transvection_matrix(SymplecticForm(1), v, 0.3).matrix();
  CHECK((lh.matrix.matrix() - sigma).norm() < 1e-9);
}

TEST_CASE("twisting pairs become transverse after separation") {
  const auto f = cat_skew();
  const auto a = hyperbolic();
  const auto cert = certify_fiber_bunching(a, f, 30, 6);
  const auto loop = make_loop(f, select_leaf(f, 1, 0), 0);
  TwistingOptions o;
  const auto pairs = twisting_pairs(a, f, cert, loop, 0.25, o);
  REQUIRE(pairs.size() == 4);
  int meeting = 0;
  for (const auto& [x, y] : pairs) meeting += intersection_dim(x, y) > 0;
  CHECK(meeting == 2);  // E^u meets E^u, E^s meets E^s
  const auto sep = separate_many(pairs, 0.1, 11);
  for (const auto& [x, y] : pairs) CHECK(intersection_dim(x.mapped(sep.sigma.matrix()), y) == 0);
}

TEST_CASE("transvection perturbation support") {
  const auto f = cat_skew();
  const auto a = hyperbolic();
  const auto loop = make_loop(f, select_leaf(f, 1, 0), 0);
  Vec v(2);
  v << 1, 0;
  const auto pert = transvection_perturbation(a, f, loop, {{v, 0.2}}, 0.05, 20);
  CHECK(pert.min_return_distance > 0.05);
  CHECK(pert.sup_change > 0.0);
  // unchanged away from z, changed at z
  CHECK((pert.field({{0.1, 0.1}, 0.3}) - a({{0.1, 0.1}, 0.3})).norm() == 0.0);
  CHECK((pert.field({loop.z.z, 0.3}) - a({loop.z.z, 0.3})).norm() > 0.01);
  CHECK_THROWS_AS(transvection_perturbation(a, f, loop, {{v, 0.2}}, 0.6, 20), SupportCollision);
  // empty or zero-strength sigma leaves A alone
  const auto none = transvection_perturbation(a, f, loop, {{v, 0.0}}, 0.05, 20);
  CHECK(none.field.factors().size() == a.factors().size());
}

TEST_CASE("rotation and shear perturbations") {
  const auto a = hyperbolic();
  const Point p{{0.2, 0.3}, 0.1};
  CHECK((rotate_perturbation(a, 0.0)(p) - a(p)).norm() == 0.0);
  CHECK((rotate_perturbation(a, 0.2)(p) - rot(0.2) * a(p)).norm() < 1e-14);
  Mat n(2, 2);
  n << 1, 0.5 * std::cos(2 * M_PI * 0.1), 0, 1;
  CHECK((leaf_shear(a, 0.5)(p) - n * a(p)).norm() < 1e-14);
}

TEST_CASE("epsilon monotonicity") {
  MonotonicityOptions o;
  o.epsilon = 6.0;
  o.seed = 1;
  const auto r = epsilon_monotonicity_test([](double t) { return rot(2 * M_PI * t); }, o);
  CHECK(r.pass);
  CHECK(r.margin >= 2 * M_PI - 1e-6);
  CHECK(r.pairs > 0);
  o.epsilon = 1e-6;
  const auto c = epsilon_monotonicity_test([](double) { return rot(0.4); }, o);
  CHECK_FALSE(c.pass);
  CHECK(c.margin == doctest::Approx(0.0));
  // twice as fast: margin doubles
  o.epsilon = 12.0;
  CHECK(epsilon_monotonicity_test([](double t) { return rot(4 * M_PI * t); }, o).margin >= 4 * M_PI - 1e-6);
  CHECK_THROWS_AS(epsilon_monotonicity_test([](double) { return Mat::Identity(4, 4).eval(); }, o), DimensionMismatch);
  o.epsilon = 0.0;
  CHECK_THROWS_AS(epsilon_monotonicity_test([](double) { return rot(0.4); }, o), InvalidArgument);
}

TEST_CASE("positivity search over the identity cocycle") {
  const auto f = cat_skew();
  PositivityConfig cfg;
  cfg.theta_grid = {0.0, 0.05, 0.1};
  cfg.leaf_shear = 0.5;
  cfg.pinching = quick_pinching();
  cfg.twisting.samples = 8;
  cfg.spectrum.n = 5000;
  cfg.spectrum.orbits = 4;
  cfg.seed = 2;
  const auto rep = positivity_search(CocycleField(1, 1.0), f, cfg);
  CHECK(rep.success);
  CHECK(rep.obstruction);
  CHECK(rep.total_size <= cfg.delta_total);
  REQUIRE(rep.spectrum_after.has_value());
  CHECK(rep.spectrum_after->top() > 3.0 * rep.spectrum_after->top_stderr());
  // without the shear the rotation family cannot help, and the search says so
  cfg.leaf_shear = 0.0;
  CHECK_THROWS_AS(positivity_search(CocycleField(1, 1.0), f, cfg), SearchFailure);
  // a tiny budget is exceeded
  cfg.leaf_shear = 0.5;
  cfg.delta_total = 0.1;
  CHECK_THROWS_AS(positivity_search(CocycleField(1, 1.0), f, cfg), SearchFailure);
}
