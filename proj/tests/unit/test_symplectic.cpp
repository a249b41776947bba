#include <doctest.h>

#include <random>

#include "cocycle_lab/errors.hpp"
#include "cocycle_lab/symplectic.hpp"
#include "support.hpp"

using namespace cocycle_lab;

TEST_CASE("standard form") {
  for (int d = 1; d <= 4; ++d) {
    const SymplecticForm form(d);
    CHECK((form.matrix() - testing::standard_j(d)).norm() == 0.0);
    std::mt19937_64 rng(d);
    const Vec u = random_unit_vector(2 * d, rng), v = random_unit_vector(2 * d, rng);
    CHECK(form.omega(u, v) == doctest::Approx(-form.omega(v, u)).epsilon(1e-14));
    CHECK(form.omega(u, u) == doctest::Approx(0.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(SymplecticForm(0), InvalidArgument);
}

TEST_CASE("symplectic inverse matches the matrix inverse") {
  std::mt19937_64 rng(7);
  const SymplecticForm form(2);
  const Mat m = testing::expm_reference(form.matrix() * testing::random_symmetric(4, rng, 0.5));
  CHECK(testing::sym_defect(m) < 1e-12);
  CHECK((form.symplectic_inverse(m) - m.inverse()).norm() < 1e-11);
  const auto sm = SymplecticMatrix::certify(m);
  CHECK((sm.inverse() * sm).distance_to_identity() < 1e-12);
}

TEST_CASE("certify rejects non-symplectic input") {
  Mat m = Mat::Identity(2, 2);
  m(0, 0) = 2.0;
  CHECK_THROWS_AS(SymplecticMatrix::certify(m), NumericalDegradation);
  CHECK_THROWS_AS(SymplecticMatrix::certify(Mat::Identity(3, 3)), DimensionMismatch);
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(SymplecticMatrix::certify(m), NumericalDegradation);
}

TEST_CASE("transvection acts as u + a omega(u, v) v") {
  std::mt19937_64 rng(11);
  for (int d = 1; d <= 3; ++d) {
    const SymplecticForm form(d);
    const Mat j = testing::standard_j(d);
    for (int rep = 0; rep < 20; ++rep) {
      const Vec v = random_unit_vector(2 * d, rng);
      const double a = std::uniform_real_distribution<double>(-2, 2)(rng);
      const Mat t = transvection_matrix(form, v, a).matrix();
      const Vec u = random_unit_vector(2 * d, rng);
      const Vec expect = u + a * u.dot(j * v) * v;
      CHECK((t * u - expect).norm() < 1e-14);
      CHECK((t * v - v).norm() < 1e-14);  // the direction is fixed
      CHECK(testing::sym_defect(t) < 1e-13);
    }
  }
}

TEST_CASE("transvections along one direction form a one-parameter group") {
  const SymplecticForm form(2);
  std::mt19937_64 rng(3);
  const Vec v = random_unit_vector(4, rng);
  const Mat a = transvection_matrix(form, v, 0.3).matrix(), b = transvection_matrix(form, v, -1.1).matrix();
  CHECK((a * b - transvection_matrix(form, v, -0.8).matrix()).norm() < 1e-14);
  CHECK((a * transvection_matrix(form, v, -0.3).matrix() - Mat::Identity(4, 4)).norm() < 1e-14);
  // Scaling v does not change the transvection: it is normalized.
  CHECK((transvection_matrix(form, 5.0 * v, 0.3).matrix() - a).norm() < 1e-14);
  CHECK_THROWS_AS(transvection_matrix(form, Vec::Zero(4), 1.0), DegenerateInput);
  CHECK_THROWS_AS(transvection_matrix(form, Vec::Ones(3), 1.0), DimensionMismatch);
}

TEST_CASE("transvection products") {
  const SymplecticForm form(3);
  std::mt19937_64 rng(5);
  std::vector<Transvection> ts;
  Mat expect = Mat::Identity(6, 6);
  for (int i = 0; i < 8; ++i) {
    ts.push_back({random_unit_vector(6, rng), 0.25 * (i - 4)});
    expect = expect * transvection_matrix(form, ts.back()).matrix();
  }
  const auto p = transvection_product(form, ts);
  CHECK((p.matrix() - expect).norm() < 1e-13);
  CHECK(testing::sym_defect(p.matrix()) < 1e-10);
}

TEST_CASE("subspaces") {
  const std::vector<int> ax{0, 2};
  const Subspace a = Subspace::coordinate(4, ax);
  CHECK(a.dim() == 2);
  CHECK(subspace_angle(a, a) < 1e-15);
  const std::vector<int> ax2{1, 3};
  const Subspace b = Subspace::coordinate(4, ax2);
  CHECK(subspace_angle(a, b) == doctest::Approx(M_PI / 2));
  CHECK(intersection_dim(a, b) == 0);
  CHECK(separation_margin(a, b) == doctest::Approx(1.0));
  // span drops dependent columns
  Mat s(4, 3);
  s << 1, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0;
  CHECK(Subspace::span(s).dim() == 2);
  CHECK(Subspace::zero(4).dim() == 0);
  CHECK(Subspace::whole(4).dim() == 4);
  // angle_to
  Vec u = Vec::Zero(4);
  u(0) = 1.0;
  u(1) = 1.0;
  CHECK(a.angle_to(u) == doctest::Approx(M_PI / 4));
  CHECK_THROWS_AS(a.angle_to(Vec::Zero(4)), DegenerateInput);
}

TEST_CASE("intersection dimension agrees with the projector oracle") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = rep % 2 ? 6 : 4;
    const int k = 1 + rep % 3;
    const int dv = std::min(n / 2, k + int(rep % 2)), dw = dv;
    if (k > dv) continue;
    const Subspace c = random_subspace(n, k, rng);
    Mat vb(n, dv), wb(n, dw);
    vb << c.basis(), random_subspace(n, dv - k, rng).basis();
    wb << c.basis(), random_subspace(n, dw - k, rng).basis();
    const Subspace v = Subspace::span(vb), w = Subspace::span(wb);
    const int oracle = testing::common_directions(v.basis(), w.basis());
    CHECK(oracle == k);
    CHECK(intersection_dim(v, w) == oracle);
    const Subspace meet = intersection(v, w);
    CHECK(meet.dim() == oracle);
    CHECK(subspace_angle(meet, c) < 1e-8);
  }
}

TEST_CASE("symplectic complement") {
  std::mt19937_64 rng(23);
  const SymplecticForm form(3);
  for (int k = 1; k <= 5; ++k) {
    const Subspace v = random_subspace(6, k, rng);
    const Subspace c = symplectic_complement(v, form);
    CHECK(c.dim() == 6 - k);
    CHECK((v.basis().transpose() * form.matrix() * c.basis()).norm() < 1e-12);
  }
  // A Lagrangian subspace is its own complement.
  const std::vector<int> ax{0, 1, 2};
  const Subspace lag = Subspace::coordinate(6, ax);
  CHECK(subspace_angle(symplectic_complement(lag, form), lag) < 1e-12);
}

TEST_CASE("separate_pair removes the intersection") {
  std::mt19937_64 rng(29);
  const double delta = 0.05;
  for (int k = 1; k <= 3; ++k) {
    const int n = 6;
    const Subspace c = random_subspace(n, k, rng);
    Mat vb(n, 3), wb(n, 3);
    vb << c.basis(), random_subspace(n, 3 - k, rng).basis();
    wb << c.basis(), random_subspace(n, 3 - k, rng).basis();
    const Subspace v = Subspace::span(vb), w = Subspace::span(wb);
    const auto r = separate_pair(v, w, delta, 100 + k);
    CHECK(r.initial_dim == k);
    CHECK(static_cast<int>(r.factors.size()) == k);
    for (const auto& t : r.factors)
      CHECK(transvection_matrix(SymplecticForm(3), t).distance_to_identity() <= delta + 1e-12);
    const Subspace moved = v.mapped(r.sigma.matrix());
    CHECK(testing::common_directions(moved.basis(), w.basis()) == 0);
    CHECK(intersection_dim(moved, w) == 0);
    CHECK(testing::sym_defect(r.sigma.matrix()) < 1e-10);
    // Same seed, same result.
    const auto again = separate_pair(v, w, delta, 100 + k);
    CHECK((again.sigma.matrix() - r.sigma.matrix()).norm() == 0.0);
  }
}

TEST_CASE("separate_pair edge cases") {
  const std::vector<int> ax{0};
  const Subspace a = Subspace::coordinate(2, ax);
  const std::vector<int> bx{1};
  const Subspace b = Subspace::coordinate(2, bx);
  const auto none = separate_pair(a, b, 0.1, 1);
  CHECK(none.factors.empty());
  CHECK(none.sigma.distance_to_identity() == 0.0);
  CHECK_THROWS_AS(separate_pair(a, a, 0.0, 1), InvalidArgument);
  // dim V + dim W > 2d: no symplectic map can separate.
  CHECK_THROWS_AS(separate_pair(Subspace::whole(2), a, 0.1, 1), DimensionMismatch);
}

TEST_CASE("separate_many handles several pairs with one sigma") {
  std::mt19937_64 rng(31);
  std::vector<std::pair<Subspace, Subspace>> pairs;
  for (int i = 0; i < 4; ++i) {
    const Subspace c = random_subspace(4, 1, rng);
    Mat vb(4, 2), wb(4, 2);
    vb << c.basis(), random_subspace(4, 1, rng).basis();
    wb << c.basis(), random_subspace(4, 1, rng).basis();
    pairs.emplace_back(Subspace::span(vb), Subspace::span(wb));
  }
  const auto r = separate_many(pairs, 0.1, 9);
  CHECK(r.sigma.distance_to_identity() <= 0.1 + 1e-12);
  for (const auto& [v, w] : pairs) CHECK(intersection_dim(v.mapped(r.sigma.matrix()), w) == 0);
}

TEST_CASE("block rotation") {
  for (int d = 1; d <= 3; ++d) {
    const Mat r = block_rotation(d, 0.7);
    CHECK(testing::sym_defect(r) < 1e-14);
    CHECK((r.transpose() * r - Mat::Identity(2 * d, 2 * d)).norm() < 1e-14);
    CHECK(r(0, 0) == doctest::Approx(std::cos(0.7)));
    CHECK(r(0, d) == doctest::Approx(std::sin(0.7)));
  }
}
