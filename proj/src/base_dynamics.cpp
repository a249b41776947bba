#include "cocycle_lab/base_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cocycle_lab/errors.hpp"

namespace cocycle_lab {

const char* to_string(LeafKind kind) {
  return kind == LeafKind::Stable ? "stable" : "unstable";
}

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw InvalidArgument("integer overflow in matrix power");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw InvalidArgument("integer overflow in matrix power");
  return r;
}

IntMatrix2 checked_product(const IntMatrix2& a, const IntMatrix2& b) {
  IntMatrix2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      r(i, j) = checked_add(checked_mul(a(i, 0), b(0, j)), checked_mul(a(i, 1), b(1, j)));
  return r;
}

Eigen::Vector2d eigenvector(const Eigen::Matrix2d& m, double mu) {
  Eigen::Vector2d v;
  if (std::abs(m(0, 1)) > 0.0)
    v = {m(0, 1), mu - m(0, 0)};
  else
    v = {mu - m(1, 1), m(1, 0)};
  v.normalize();
  if (v(0) < 0 || (v(0) == 0 && v(1) < 0)) v = -v;
  return v;
}

std::int64_t mod_pos(__int128 a, std::int64_t m) {
  __int128 r = a % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

RationalPoint reduce(std::int64_t a, std::int64_t b, std::int64_t den) {
  const std::int64_t g = std::gcd(std::gcd(a, b), den);
  return {a / g, b / g, den / g};
}

}  // namespace

IntMatrix2 checked_power(const IntMatrix2& m, int n) {
  if (n < 0) throw InvalidArgument("checked_power needs n >= 0");
  IntMatrix2 r = IntMatrix2::Identity();
  for (int i = 0; i < n; ++i) r = checked_product(r, m);
  return r;
}

TorusAutomorphism::TorusAutomorphism(const IntMatrix2& m) : m_(m) {
  const std::int64_t det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const std::int64_t tr = m(0, 0) + m(1, 1);
  if (det != 1 && det != -1) {
    std::ostringstream os;
    os << "torus automorphism must have det +-1, got " << det;
    throw InvalidArgument(os.str());
  }
  if (std::abs(tr) <= 2) {
    std::ostringstream os;
    os << "torus automorphism must be hyperbolic (|trace| > 2), got trace " << tr;
    throw InvalidArgument(os.str());
  }
  inv_ << det * m(1, 1), -det * m(0, 1), -det * m(1, 0), det * m(0, 0);
  md_ = m.cast<double>();
  invd_ = inv_.cast<double>();
  const double half = 0.5 * static_cast<double>(tr);
  const double root = std::sqrt(half * half - static_cast<double>(det));
  const double l1 = half + root, l2 = half - root;
  mu_u_ = std::abs(l1) > std::abs(l2) ? l1 : l2;
  mu_s_ = static_cast<double>(det) / mu_u_;
  e_u_ = eigenvector(md_, mu_u_);
  e_s_ = eigenvector(md_, mu_s_);
  Eigen::Matrix2d basis;
  basis << e_u_, e_s_;
  eig_inv_ = basis.inverse();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(basis);
  c_ = svd.singularValues()(0) / svd.singularValues()(1);
}

Eigen::Vector2d TorusAutomorphism::apply(const Eigen::Vector2d& x) const {
  return wrap_torus(md_ * x);
}

Eigen::Vector2d TorusAutomorphism::apply_inverse(const Eigen::Vector2d& x) const {
  return wrap_torus(invd_ * x);
}

Eigen::Vector2d TorusAutomorphism::iterate(Eigen::Vector2d x, long n) const {
  for (long i = 0; i < n; ++i) x = apply(x);
  for (long i = 0; i < -n; ++i) x = apply_inverse(x);
  return x;
}

Eigen::Vector2d TorusAutomorphism::eigen_coordinates(const Eigen::Vector2d& d) const {
  return eig_inv_ * d;
}

Eigen::Vector2d TorusAutomorphism::bracket(const Eigen::Vector2d& x,
                                           const Eigen::Vector2d& y) const {
  if (torus_distance(x, y) > bracket_radius())
    throw InvalidArgument("bracket undefined: points farther apart than the bracket radius");
  // x + s e_s = y - u e_u  with  d = y - x = u e_u + s e_s.
  const Eigen::Vector2d ab = eigen_coordinates(torus_displacement(x, y));
  return wrap_torus(x + ab(1) * e_s_);
}

SkewProduct::SkewProduct(TorusAutomorphism base, TrigPoly theta)
    : base_(std::move(base)), theta_(std::move(theta)) {
  if (!theta_.base_only()) throw InvalidArgument("fiber shift theta must not depend on t");
}

Point SkewProduct::step(const Point& p) const {
  return {base_.apply(p.x), wrap_unit(p.t + theta_(p.x))};
}

Point SkewProduct::step_back(const Point& p) const {
  const Eigen::Vector2d prev = base_.apply_inverse(p.x);
  return {prev, wrap_unit(p.t - theta_(prev))};
}

Point SkewProduct::iterate(Point p, long n) const {
  for (long i = 0; i < n; ++i) p = step(p);
  for (long i = 0; i < -n; ++i) p = step_back(p);
  return p;
}

Point iterate_base(const SkewProduct& f, const Point& p, long n) { return f.iterate(p, n); }

RationalPoint apply_exact(const TorusAutomorphism& g, const RationalPoint& p) {
  const auto& m = g.matrix();
  const std::int64_t a =
      mod_pos(static_cast<__int128>(m(0, 0)) * p.num1 + static_cast<__int128>(m(0, 1)) * p.num2, p.den);
  const std::int64_t b =
      mod_pos(static_cast<__int128>(m(1, 0)) * p.num1 + static_cast<__int128>(m(1, 1)) * p.num2, p.den);
  return reduce(a, b, p.den);
}

std::vector<RationalPoint> periodic_base_points(const TorusAutomorphism& g, int n) {
  if (n < 1) throw InvalidArgument("periodic_base_points needs n >= 1");
  IntMatrix2 b = checked_power(g.matrix(), n);
  b(0, 0) = checked_add(b(0, 0), -1);
  b(1, 1) = checked_add(b(1, 1), -1);
  const std::int64_t det = checked_add(checked_mul(b(0, 0), b(1, 1)), -checked_mul(b(0, 1), b(1, 0)));
  const std::int64_t count = det < 0 ? -det : det;
  if (count == 0) throw InvalidArgument("M^n - I is singular; automorphism is not hyperbolic");
  if (count > kMaxPeriodicPoints) {
    std::ostringstream os;
    os << "|det(M^" << n << " - I)| = " << count << " exceeds the enumeration bound "
       << kMaxPeriodicPoints;
    throw InvalidArgument(os.str());
  }
  // Solutions of (M^n - I) x = 0 mod Z^2 form the group B^{-1} Z^2 / Z^2,
  // generated by the columns of adj(B) / det.
  const std::int64_t sgn = det < 0 ? -1 : 1;
  const std::int64_t g1a = mod_pos(sgn * b(1, 1), count), g1b = mod_pos(-sgn * b(1, 0), count);
  const std::int64_t g2a = mod_pos(-sgn * b(0, 1), count), g2b = mod_pos(sgn * b(0, 0), count);

  std::unordered_set<std::int64_t> seen;
  std::vector<std::pair<std::int64_t, std::int64_t>> frontier{{0, 0}};
  seen.insert(0);
  std::vector<RationalPoint> out;
  while (!frontier.empty()) {
    const auto [a, c] = frontier.back();
    frontier.pop_back();
    out.push_back(reduce(a, c, count));
    const std::pair<std::int64_t, std::int64_t> nexts[2] = {
        {(a + g1a) % count, (c + g1b) % count}, {(a + g2a) % count, (c + g2b) % count}};
    for (const auto& [na, nc] : nexts) {
      const std::int64_t key = na * count + nc;
      if (seen.insert(key).second) frontier.push_back({na, nc});
    }
  }
  if (static_cast<std::int64_t>(out.size()) != count)
    throw Error("periodic point enumeration inconsistent with |det(M^n - I)|");
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void classify_rotation(PeriodicLeaf& leaf, const RationalityOptions& opts) {
  const double r = leaf.rotation;
  // Continued fraction convergents of r in [0, 1).
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double x = r;
  leaf.irrational = true;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    const std::int64_t ai = static_cast<std::int64_t>(a);
    const std::int64_t p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (q2 > opts.max_denominator) break;
    if (std::abs(r - static_cast<double>(p2) / q2) <= opts.tolerance) {
      leaf.irrational = false;
      leaf.rational_num = p2 % q2;
      leaf.rational_den = q2;
      break;
    }
    const double frac = x - a;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
  }
  if (leaf.irrational && (r < opts.tolerance || 1.0 - r < opts.tolerance)) {
    leaf.irrational = false;
    leaf.rational_num = 0;
    leaf.rational_den = 1;
  }
}

}  // namespace

PeriodicLeaf make_leaf(const SkewProduct& f, const RationalPoint& base,
                       const RationalityOptions& opts) {
  PeriodicLeaf leaf;
  leaf.base = base;
  RationalPoint cur = base;
  do {
    leaf.orbit.push_back(cur);
    cur = apply_exact(f.base(), cur);
    if (leaf.orbit.size() > static_cast<std::size_t>(kMaxPeriodicPoints))
      throw InvalidArgument("point is not periodic");
  } while (!(cur == base));
  leaf.period = static_cast<int>(leaf.orbit.size());
  double sum = 0.0;
  for (const auto& q : leaf.orbit) sum += f.theta()(q.to_vector());
  leaf.rotation = wrap_unit(sum);
  classify_rotation(leaf, opts);
  return leaf;
}

PeriodicLeaf select_leaf(const SkewProduct& f, int period, int index,
                         const RationalityOptions& opts) {
  if (index < 0) throw InvalidArgument("leaf index must be >= 0");
  int seen = 0;
  for (const auto& pt : periodic_base_points(f.base(), period)) {
    PeriodicLeaf leaf = make_leaf(f, pt, opts);
    if (leaf.period != period) continue;
    if (seen++ == index) return leaf;
  }
  std::ostringstream os;
  os << "no periodic point of minimal period " << period << " with index " << index;
  throw InvalidArgument(os.str());
}

Eigen::Vector2d homoclinic_orbit(const TorusAutomorphism& g, const HomoclinicPoint& h, long n) {
  if (n >= 0)
    return wrap_torus(h.p + std::pow(g.mu_s(), static_cast<double>(n)) * h.coef_s * g.e_s());
  return wrap_torus(h.p + std::pow(g.mu_u(), static_cast<double>(n)) * h.coef_u * g.e_u());
}

HomoclinicPoint find_homoclinic(const TorusAutomorphism& g, const Eigen::Vector2d& p, int index,
                                int budget) {
  if (index < 0) throw InvalidArgument("homoclinic index must be >= 0");
  if (torus_distance(g.apply(p), p) > 1e-12) throw InvalidArgument("find_homoclinic needs a fixed point");
  Eigen::Matrix2d sys;
  sys << g.e_u(), -g.e_s();
  const Eigen::Matrix2d sys_inv = sys.inverse();
  const double mu = g.mu_u();

  auto canonical = [&](double a) {
    double c = a;
    while (std::abs(c) >= std::abs(mu)) c /= mu;
    while (std::abs(c) < 1.0) c *= mu;
    return c;
  };
  auto same_orbit = [&](double c1, double c2) {
    const double tol = 1e-9 * std::abs(mu);
    return std::abs(c1 - c2) < tol || std::abs(c1 * mu - c2) < tol || std::abs(c1 - c2 * mu) < tol;
  };

  std::vector<double> keys;
  for (int radius = 1; radius <= 64; ++radius) {
    for (int i = -radius; i <= radius; ++i) {
      for (int j = -radius; j <= radius; ++j) {
        if (std::max(std::abs(i), std::abs(j)) != radius) continue;
        const Eigen::Vector2d ab = sys_inv * Eigen::Vector2d(i, j);
        const double key = canonical(ab(0));
        bool fresh = true;
        for (double k : keys)
          if (same_orbit(k, key)) fresh = false;
        if (!fresh) continue;
        keys.push_back(key);
        if (static_cast<int>(keys.size()) - 1 != index) continue;

        // Pick the orbit representative that balances the two coordinates.
        double a = ab(0), b = ab(1);
        for (int step = 0; step < 200; ++step) {
          const double na = a * g.mu_u(), nb = b * g.mu_s();
          const double pa = a / g.mu_u(), pb = b / g.mu_s();
          const double cur = std::max(std::abs(a), std::abs(b));
          if (std::max(std::abs(na), std::abs(nb)) < cur) {
            a = na; b = nb;
          } else if (std::max(std::abs(pa), std::abs(pb)) < cur) {
            a = pa; b = pb;
          } else {
            break;
          }
        }
        HomoclinicPoint h;
        h.p = p;
        h.coef_u = a;
        h.coef_s = b;
        const Eigen::Vector2d lat = a * g.e_u() - b * g.e_s();
        h.lattice_offset = {static_cast<int>(std::lround(lat(0))), static_cast<int>(std::lround(lat(1)))};
        h.z = wrap_torus(p + a * g.e_u());
        h.budget_s = budget;
        h.budget_u = budget;
        h.index = index;
        if (torus_distance(h.z, wrap_torus(p + b * g.e_s())) > 1e-10)
          throw ConvergenceFailure("homoclinic representations disagree; eigenvector precision lost");
        if (torus_distance(h.z, p) < 1e-9) continue;  // z must be off the orbit of p

        // Verify the exponential approach in both time directions.
        const double lam = g.contraction();
        // Direct iteration loses ~log10(|mu_u|) digits per step; compare with
        // the exact representation only while that error stays below 1e-8.
        const int numeric_horizon =
            std::min(budget, static_cast<int>(std::floor(8.0 * std::log(10.0) / std::log(g.expansion()))));
        Eigen::Vector2d fwd = h.z, bwd = h.z;
        for (int n = 0; n <= budget; ++n) {
          const double bound_s = std::abs(b) * std::pow(lam, n) * (1 + 1e-6) + 1e-9;
          const double bound_u = std::abs(a) * std::pow(lam, n) * (1 + 1e-6) + 1e-9;
          const Eigen::Vector2d zs = homoclinic_orbit(g, h, n), zu = homoclinic_orbit(g, h, -n);
          const double ds = torus_distance(zs, p), du = torus_distance(zu, p);
          const bool numeric = n <= numeric_horizon;
          const double ref_s = numeric ? torus_distance(fwd, zs) : 0.0;
          const double ref_u = numeric ? torus_distance(bwd, zu) : 0.0;
          if (ds > bound_s || du > bound_u || ref_s > 1e-6 || ref_u > 1e-6) {
            std::ostringstream os;
            os << "homoclinic convergence check failed at n = " << n;
            throw ConvergenceFailure(os.str());
          }
          fwd = g.apply(fwd);
          bwd = g.apply_inverse(bwd);
        }
        return h;
      }
    }
  }
  throw SearchFailure("homoclinic index beyond the enumerated lattice offsets");
}

double center_shift_along(const SkewProduct& f, const Eigen::Vector2d& x, double coef,
                          LeafKind kind) {
  const auto& g = f.base();
  const double lip = f.theta().lipschitz_bound();
  if (lip == 0.0 || coef == 0.0) return 0.0;
  const double lam = g.contraction();
  const double tail_factor = lip * std::abs(coef) / (1.0 - lam);
  constexpr double kTailTol = 1e-12;
  constexpr int kMaxTerms = 5000;
  double sum = 0.0;
  if (kind == LeafKind::Stable) {
    Eigen::Vector2d xn = x;
    double scale = coef;
    for (int n = 0; n < kMaxTerms; ++n) {
      if (tail_factor * std::pow(lam, n) < kTailTol) return sum;
      const Eigen::Vector2d yn = wrap_torus(xn + scale * g.e_s());
      sum += f.theta()(xn) - f.theta()(yn);
      xn = g.apply(xn);
      scale *= g.mu_s();
    }
  } else {
    Eigen::Vector2d xn = x;
    double scale = coef;
    for (int n = 1; n < kMaxTerms; ++n) {
      if (tail_factor * std::pow(lam, n) < kTailTol) return -sum;
      xn = g.apply_inverse(xn);
      scale /= g.mu_u();
      const Eigen::Vector2d yn = wrap_torus(xn + scale * g.e_u());
      sum += f.theta()(xn) - f.theta()(yn);
    }
  }
  throw ConvergenceFailure("center holonomy series did not reach its tail tolerance");
}

double center_holonomy_shift(const SkewProduct& f, const Eigen::Vector2d& x,
                             const Eigen::Vector2d& y, LeafKind kind) {
  const auto& g = f.base();
  const Eigen::Vector2d ab = g.eigen_coordinates(torus_displacement(x, y));
  const double along = kind == LeafKind::Stable ? ab(1) : ab(0);
  const double across = kind == LeafKind::Stable ? ab(0) : ab(1);
  if (std::abs(across) > 1e-9 || std::abs(along) > g.local_size()) {
    std::ostringstream os;
    os << "point is not on the local " << to_string(kind) << " segment (transverse offset "
       << across << ", along " << along << ")";
    throw NotOnLeaf(os.str());
  }
  return center_shift_along(f, x, along, kind);
}

}  // namespace cocycle_lab
