#pragma once

// Partially hyperbolic base: a linear Anosov automorphism g of T^2 crossed
// with circle fibers, f(x, t) = (g x, t + theta(x)).

#include <compare>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cocycle_lab/trig_poly.hpp"

namespace cocycle_lab {

using IntMatrix2 = Eigen::Matrix<std::int64_t, 2, 2>;

enum class LeafKind { Stable, Unstable };

const char* to_string(LeafKind kind);

class TorusAutomorphism {
 public:
  /// Requires det M = +-1 and |trace M| > 2.
  explicit TorusAutomorphism(const IntMatrix2& m);

  const IntMatrix2& matrix() const { return m_; }
  const IntMatrix2& inverse_matrix() const { return inv_; }
  /// Signed eigenvalues: M e_u = mu_u e_u, M e_s = mu_s e_s, |mu_u| > 1.
  double mu_u() const { return mu_u_; }
  double mu_s() const { return mu_s_; }
  const Eigen::Vector2d& e_u() const { return e_u_; }
  const Eigen::Vector2d& e_s() const { return e_s_; }
  double expansion() const { return std::abs(mu_u_); }
  double contraction() const { return 1.0 / std::abs(mu_u_); }
  /// Condition number of the eigenbasis; bounds distortion of the local
  /// product structure.
  double hyperbolicity_constant() const { return c_; }
  /// Size of local stable/unstable segments.
  double local_size() const { return 0.1; }
  /// Points closer than this have a well-defined bracket.
  double bracket_radius() const { return local_size() / c_; }

  Eigen::Vector2d apply(const Eigen::Vector2d& x) const;
  Eigen::Vector2d apply_inverse(const Eigen::Vector2d& x) const;
  Eigen::Vector2d iterate(Eigen::Vector2d x, long n) const;

  /// Coordinates (a, b) with d = a e_u + b e_s.
  Eigen::Vector2d eigen_coordinates(const Eigen::Vector2d& d) const;
  /// The unique point of W^s_loc(x) cap W^u_loc(y); throws when the points
  /// are farther apart than bracket_radius().
  Eigen::Vector2d bracket(const Eigen::Vector2d& x, const Eigen::Vector2d& y) const;

 private:
  IntMatrix2 m_;
  IntMatrix2 inv_;
  Eigen::Matrix2d md_;
  Eigen::Matrix2d invd_;
  double mu_u_ = 0, mu_s_ = 0;
  Eigen::Vector2d e_u_, e_s_;
  Eigen::Matrix2d eig_inv_;
  double c_ = 1.0;
};

/// Checked integer power of a 2x2 integer matrix; throws InvalidArgument on
/// int64 overflow.
IntMatrix2 checked_power(const IntMatrix2& m, int n);

class SkewProduct {
 public:
  /// theta must not depend on the fiber coordinate.
  SkewProduct(TorusAutomorphism base, TrigPoly theta);

  const TorusAutomorphism& base() const { return base_; }
  const TrigPoly& theta() const { return theta_; }

  /// Contraction/expansion rates of the splitting E^s + E^c + E^u. The
  /// center is isometric, so gamma = gamma_hat = 1.
  double nu() const { return base_.contraction(); }
  double nu_hat() const { return base_.contraction(); }
  double gamma() const { return 1.0; }
  double gamma_hat() const { return 1.0; }

  Point step(const Point& p) const;
  Point step_back(const Point& p) const;
  /// f^n; negative n iterates the inverse.
  Point iterate(Point p, long n) const;

 private:
  TorusAutomorphism base_;
  TrigPoly theta_;
};

Point iterate_base(const SkewProduct& f, const Point& p, long n);

/// Exact point of T^2 with coordinates num / den, den > 0, 0 <= num < den.
struct RationalPoint {
  std::int64_t num1 = 0;
  std::int64_t num2 = 0;
  std::int64_t den = 1;

  Eigen::Vector2d to_vector() const {
    return {static_cast<double>(num1) / den, static_cast<double>(num2) / den};
  }
  bool operator==(const RationalPoint&) const = default;
  auto operator<=>(const RationalPoint& o) const {
    // Lexicographic by value.
    const __int128 a = static_cast<__int128>(num1) * o.den, b = static_cast<__int128>(o.num1) * den;
    if (a != b) return a < b ? std::strong_ordering::less : std::strong_ordering::greater;
    const __int128 c = static_cast<__int128>(num2) * o.den, d = static_cast<__int128>(o.num2) * den;
    if (c != d) return c < d ? std::strong_ordering::less : std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
};

RationalPoint apply_exact(const TorusAutomorphism& g, const RationalPoint& p);

/// Upper bound on |det(M^n - I)| accepted by periodic_base_points.
inline constexpr std::int64_t kMaxPeriodicPoints = 5'000'000;

/// Every g-periodic point whose period divides n, sorted lexicographically.
/// The count is |det(M^n - I)|.
std::vector<RationalPoint> periodic_base_points(const TorusAutomorphism& g, int n);

/// Periodic center leaf K = {p} x S^1.
struct PeriodicLeaf {
  RationalPoint base;
  std::vector<RationalPoint> orbit;  // orbit[0] = base, minimal period = size
  int period = 1;
  /// theta_p = sum of theta along the orbit, mod 1.
  double rotation = 0.0;
  bool irrational = true;
  /// When rational, rotation = rational_num / rational_den.
  std::int64_t rational_num = 0;
  std::int64_t rational_den = 1;

  /// k(p): smallest k with f^k = id on the fiber (0 if the rotation is irrational).
  std::int64_t fiber_return_time() const { return irrational ? 0 : period * rational_den; }
};

struct RationalityOptions {
  std::int64_t max_denominator = 1000;
  double tolerance = 1e-11;
};

PeriodicLeaf make_leaf(const SkewProduct& f, const RationalPoint& base,
                       const RationalityOptions& opts = {});
/// index-th point (lexicographic) of minimal period exactly `period`.
PeriodicLeaf select_leaf(const SkewProduct& f, int period, int index,
                         const RationalityOptions& opts = {});

/// Homoclinic point z of a fixed point p: z = p + a e_u = p + b e_s + m, m in Z^2 \ {0}.
struct HomoclinicPoint {
  Eigen::Vector2d p;
  Eigen::Vector2d z;
  double coef_u = 0.0;  // a
  double coef_s = 0.0;  // b
  Eigen::Vector2i lattice_offset{0, 0};
  int budget_s = 20;
  int budget_u = 20;
  int index = 0;
};

/// g^n z through the stable (n >= 0) or unstable (n < 0) representation.
Eigen::Vector2d homoclinic_orbit(const TorusAutomorphism& g, const HomoclinicPoint& h, long n);

/// Homoclinic points on pairwise distinct g-orbits, enumerated by lattice
/// offset; `index` selects one.
HomoclinicPoint find_homoclinic(const TorusAutomorphism& g, const Eigen::Vector2d& p, int index,
                                int budget = 20);

/// Shift of the center holonomy between the fibers over x and
/// y = x + coef e_{s|u}:  h_{x,y}(t) = t + shift.
double center_shift_along(const SkewProduct& f, const Eigen::Vector2d& x, double coef,
                          LeafKind kind);
/// Same, with y given as a point; y must lie on the local stable (unstable)
/// segment through x.
double center_holonomy_shift(const SkewProduct& f, const Eigen::Vector2d& x,
                             const Eigen::Vector2d& y, LeafKind kind);

}  // namespace cocycle_lab
