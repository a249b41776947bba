#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace cocycle_lab {

/// A point of T^2 x S^1, all coordinates in [0, 1).
struct Point {
  Eigen::Vector2d x{0.0, 0.0};
  double t = 0.0;
};

double wrap_unit(double s);
/// Signed representative of s mod 1 in [-1/2, 1/2).
double wrap_centered(double s);
Eigen::Vector2d wrap_torus(const Eigen::Vector2d& x);
/// Quotient distance on T^2 (minimum over lattice translates).
double torus_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b);
/// Nearest-lift displacement b - a.
Eigen::Vector2d torus_displacement(const Eigen::Vector2d& a, const Eigen::Vector2d& b);
/// Product distance on T^2 x S^1.
double point_distance(const Point& a, const Point& b);
inline constexpr double kSpaceDiameter = 0.8660254037844386;  // sqrt(3)/2

/// One real Fourier mode: coef * cos(2 pi k.(x1, x2, t)) (or sin).
struct FourierTerm {
  double coef = 0.0;
  std::array<int, 3> k{0, 0, 0};
  bool is_sin = false;
};

/// Real trigonometric polynomial on T^2 x S^1.
class TrigPoly {
 public:
  TrigPoly() = default;
  explicit TrigPoly(std::vector<FourierTerm> terms) : terms_(std::move(terms)) {}
  static TrigPoly constant(double c) { return TrigPoly({FourierTerm{c, {0, 0, 0}, false}}); }

  double operator()(const Point& p) const;
  double operator()(const Eigen::Vector2d& x) const { return (*this)(Point{x, 0.0}); }

  const std::vector<FourierTerm>& terms() const { return terms_; }
  /// psi(p) - psi(p - d) for d = (dx1, dx2, dt), accurate relative to |d|.
  double difference(const Point& p, const Eigen::Vector3d& d) const;
  bool is_constant() const;
  /// True when no term depends on the fiber coordinate.
  bool base_only() const;
  /// sum |coef|.
  double sup_bound() const;
  /// sum |coef| 2 pi |k|, a Lipschitz constant for the Euclidean quotient metric.
  double lipschitz_bound() const;
  TrigPoly scaled(double s) const;

 private:
  std::vector<FourierTerm> terms_;
};

}  // namespace cocycle_lab
