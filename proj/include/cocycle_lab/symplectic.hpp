#pragma once

// Symplectic linear algebra on R^{2d} with the standard form
//   J = [[0, I_d], [-I_d, 0]],   omega(u, v) = u^T J v.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cocycle_lab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kSymplecticTolerance = 1e-10;

/// Spectral (operator 2-) norm.
double op_norm(const Mat& m);

class SymplecticForm {
 public:
  explicit SymplecticForm(int half_dim);

  int half_dim() const { return d_; }
  int dim() const { return 2 * d_; }
  const Mat& matrix() const { return j_; }
  double omega(const Vec& u, const Vec& v) const { return u.dot(j_ * v); }

  /// ||M^T J M - J||.
  double drift(const Mat& m) const;
  /// -J M^T J, exact inverse of a symplectic M.
  Mat symplectic_inverse(const Mat& m) const;
  /// True when S^T J + J S = 0 within tol * max(1, ||S||).
  bool is_hamiltonian(const Mat& s, double tol = 1e-12) const;

 private:
  int d_;
  Mat j_;
};

/// A 2d x 2d matrix that has been checked against the standard form.
class SymplecticMatrix {
 public:
  /// Throws NumericalDegradation when the relative drift
  /// ||M^T J M - J|| / max(1, ||M||^2) exceeds tol.
  static SymplecticMatrix certify(Mat m, double tol = kSymplecticTolerance);
  static SymplecticMatrix identity(int dim);

  const Mat& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  int half_dim() const { return dim() / 2; }
  /// Absolute drift ||M^T J M - J||.
  double drift() const { return drift_; }
  double relative_drift() const;

  SymplecticMatrix inverse() const;
  SymplecticMatrix operator*(const SymplecticMatrix& rhs) const;
  /// ||M - I||.
  double distance_to_identity() const;

 private:
  SymplecticMatrix(Mat m, double drift) : m_(std::move(m)), drift_(drift) {}
  Mat m_;
  double drift_;
};

/// Linear subspace held as a column-orthonormal basis (ambient x dim).
class Subspace {
 public:
  /// Span of the columns of `spanning`; columns whose singular value is below
  /// rank_tol * sigma_max are dropped.
  static Subspace span(const Mat& spanning, double rank_tol = 1e-12);
  static Subspace zero(int ambient);
  static Subspace whole(int ambient);
  /// Span of the listed standard basis vectors (0-based).
  static Subspace coordinate(int ambient, std::span<const int> axes);

  int ambient_dim() const { return ambient_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Mat& basis() const { return basis_; }
  Mat projector() const { return basis_ * basis_.transpose(); }

  /// Image under a linear map.
  Subspace mapped(const Mat& m) const;
  /// Euclidean angle between a nonzero vector and this subspace.
  double angle_to(const Vec& u) const;

 private:
  Subspace(int ambient, Mat basis) : ambient_(ambient), basis_(std::move(basis)) {}
  int ambient_;
  Mat basis_;
};

/// Largest principal angle between equal-dimension subspaces (pi/2 when the
/// dimensions differ). Zero exactly when the subspaces coincide.
double subspace_angle(const Subspace& a, const Subspace& b);
/// ||P_a - P_b||.
double subspace_distance(const Subspace& a, const Subspace& b);

/// dim(V cap W) from the rank of [V | W]: singular values below
/// tol * sigma_max count as zero.
int intersection_dim(const Subspace& v, const Subspace& w, double tol = 1e-8);
/// Orthonormal basis of V cap W at the same threshold.
Subspace intersection(const Subspace& v, const Subspace& w, double tol = 1e-8);
/// Smallest singular value of [V | W]; positive iff V cap W = {0}.
double separation_margin(const Subspace& v, const Subspace& w);

/// V^{perp omega} = { u : omega(u, v) = 0 for all v in V }.
Subspace symplectic_complement(const Subspace& v, const SymplecticForm& form);

/// u -> u + strength * omega(u, direction) * direction, direction unit length.
struct Transvection {
  Vec direction;
  double strength = 0.0;
};

/// Matrix of the transvection tau_{v,a}. v is normalized first; a zero v
/// throws DegenerateInput.
SymplecticMatrix transvection_matrix(const SymplecticForm& form, const Vec& v, double a);
SymplecticMatrix transvection_matrix(const SymplecticForm& form, const Transvection& t);
/// Product t[0] * t[1] * ... * t[n-1].
SymplecticMatrix transvection_product(const SymplecticForm& form,
                                      std::span<const Transvection> factors);

struct SeparationStep {
  Vec u0;
  double strength = 0.0;
  int dim_before = 0;
  int dim_after = 0;
  int rejected_samples = 0;
};

struct SeparationResult {
  SymplecticMatrix sigma = SymplecticMatrix::identity(2);
  /// sigma = factors[0] * factors[1] * ... ; factors.back() acts first.
  std::vector<Transvection> factors;
  std::vector<SeparationStep> trace;
  int initial_dim = 0;
  std::uint64_t seed = 0;
};

struct SeparationOptions {
  double intersection_tol = 1e-8;
  /// Angular distance u0 must keep from V+W and from the omega-complement.
  double avoid_angle = 1e-6;
  int max_samples = 1000;
  int max_retries = 20;
};

/// Builds k = dim(V cap W) transvections, each within delta/k of the
/// identity, whose product sigma satisfies sigma(V) cap W = {0}.
SeparationResult separate_pair(const Subspace& v, const Subspace& w, double delta,
                               std::uint64_t seed, const SeparationOptions& opts = {});

/// One sigma with ||sigma - I|| <= delta separating every pair at once.
SeparationResult separate_many(std::span<const std::pair<Subspace, Subspace>> pairs,
                               double delta, std::uint64_t seed,
                               const SeparationOptions& opts = {});

/// Block rotation [[cos a I, sin a I], [-sin a I, cos a I]].
Mat block_rotation(int half_dim, double angle);

/// Uniform random point on the unit sphere of R^n.
template <class Rng>
Vec random_unit_vector(int n, Rng& rng);

/// Haar-like random orthonormal basis of a dim-dimensional subspace.
template <class Rng>
Subspace random_subspace(int ambient, int dim, Rng& rng);

}  // namespace cocycle_lab

#include "cocycle_lab/detail/random_linalg.hpp"
