#pragma once

// Hoelder cocycles A : T^2 x S^1 -> Sp(2d, R) and their iterates.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "cocycle_lab/base_dynamics.hpp"
#include "cocycle_lab/symplectic.hpp"

namespace cocycle_lab {

/// exp(psi(x) S) with S in the symplectic Lie algebra. A nonzero winding w
/// adds w.(x1, x2, t) to psi; it needs exp(S) = I so the factor stays
/// well defined on the torus (e.g. S = 2 pi J for rotations).
struct ExpFactor {
  Mat generator;
  TrigPoly psi;
  std::array<int, 3> winding{0, 0, 0};

  double exponent(const Point& p) const;
  bool winds() const { return winding[0] != 0 || winding[1] != 0 || winding[2] != 0; }
};

/// A fixed symplectic matrix.
struct ConstFactor {
  Mat matrix;
  std::string label;
};

/// prod_i (I + phi(x) (sigma_i - I)) with a bump phi localized near the
/// center fiber over `center`. Each slice is the transvection tau_{v_i, phi a_i}.
struct BumpFactor {
  Eigen::Vector2d center{0.0, 0.0};
  double radius = 0.0;
  /// Fiber arc; a half width >= 0.5 covers the whole fiber.
  double arc_center = 0.0;
  double arc_halfwidth = 1.0;
  std::vector<Transvection> factors;

  /// 1 on the inner half, smoothstep ramp to 0 at `radius`.
  double weight(const Point& p) const;
  /// Lipschitz constant of weight().
  double weight_lipschitz() const;
};

using CocycleFactor = std::variant<ExpFactor, ConstFactor, BumpFactor>;

/// A(x) = F_1(x) F_2(x) ... F_m(x), evaluated left to right as listed.
class CocycleField {
 public:
  CocycleField(int half_dim, double alpha, std::vector<CocycleFactor> factors = {});

  int half_dim() const { return d_; }
  int dim() const { return 2 * d_; }
  double alpha() const { return alpha_; }
  const std::vector<CocycleFactor>& factors() const { return factors_; }
  const SymplecticForm& form() const { return form_; }

  Mat evaluate(const Point& p) const;
  Mat operator()(const Point& p) const { return evaluate(p); }
  /// A(q)^{-1} A(p) - I where q = p - d, d = (dx1, dx2, dt) the lifted
  /// displacement; computed factor by factor so the result keeps relative
  /// accuracy as d -> 0.
  Mat quotient_minus_identity(const Point& p, const Point& q, const Eigen::Vector3d& d) const;
  /// True when no factor depends on the point.
  bool is_constant() const;

  /// Upper bound for sup ||A(x)|| computed from the coefficients.
  double sup_bound() const;
  /// Lipschitz bound for x -> A(x) computed from the coefficients.
  double lipschitz_bound() const;

  CocycleField with_prefix(CocycleFactor f) const;
  CocycleField with_suffix(CocycleFactor f) const;

 private:
  Mat evaluate_factor_uncached(const CocycleFactor& f, const Point& p) const;

  int d_;
  double alpha_;
  SymplecticForm form_;
  std::vector<CocycleFactor> factors_;
  std::vector<Mat> constant_cache_;  // per-factor value when the factor is constant
};

/// exp of an element of sp(2d); closed form for d = 1.
Mat hamiltonian_exp(const Mat& x);
/// exp(x) - I without cancellation for small x.
Mat hamiltonian_expm1(const Mat& x);

/// Linear cocycle (f, A): base map plus matrix generator.
class LinearCocycle {
 public:
  virtual ~LinearCocycle() = default;
  virtual int dim() const = 0;
  virtual Mat matrix_at(const Point& p) const = 0;
  virtual Point advance(const Point& p) const = 0;
  virtual Point retreat(const Point& p) const = 0;
  /// Draw from the reference invariant measure.
  virtual Point sample(std::mt19937_64& rng) const = 0;
  virtual std::string measure() const = 0;

  Point iterate(Point p, long n) const;
};

class SkewCocycle final : public LinearCocycle {
 public:
  SkewCocycle(CocycleField field, SkewProduct base);
  int dim() const override { return field_.dim(); }
  Mat matrix_at(const Point& p) const override { return field_.evaluate(p); }
  Point advance(const Point& p) const override { return base_.step(p); }
  Point retreat(const Point& p) const override { return base_.step_back(p); }
  Point sample(std::mt19937_64& rng) const override;
  std::string measure() const override { return "lebesgue(T^2 x S^1)"; }

  const CocycleField& field() const { return field_; }
  const SkewProduct& base() const { return base_; }

 private:
  CocycleField field_;
  SkewProduct base_;
};

/// Cocycle over the circle rotation t -> t + rotation on a center leaf.
class LeafCocycle final : public LinearCocycle {
 public:
  LeafCocycle(int dim, Eigen::Vector2d base_point, double rotation,
              std::function<Mat(double)> matrix, std::string measure = "lebesgue(S^1)");
  int dim() const override { return dim_; }
  Mat matrix_at(const Point& p) const override { return matrix_(p.t); }
  Mat at(double t) const { return matrix_(t); }
  Point advance(const Point& p) const override;
  Point retreat(const Point& p) const override;
  Point sample(std::mt19937_64& rng) const override;
  std::string measure() const override { return measure_; }

  double rotation() const { return rotation_; }
  const Eigen::Vector2d& base_point() const { return base_point_; }
  Point at_fiber(double t) const { return Point{base_point_, wrap_unit(t)}; }

 private:
  int dim_;
  Eigen::Vector2d base_point_;
  double rotation_;
  std::function<Mat(double)> matrix_;
  std::string measure_;
};

/// B(t) = A^{n_p}(p, t) over t -> t + theta_p: the return cocycle on K.
LeafCocycle restrict_to_leaf(const CocycleField& field, const SkewProduct& f,
                             const PeriodicLeaf& leaf);

struct ProductResult {
  SymplecticMatrix value = SymplecticMatrix::identity(2);
  int corrections = 0;
  double max_relative_drift = 0.0;
};

struct ProductOptions {
  int recertify_every = 50;
  double correction_threshold = 1e-12;
  double failure_threshold = 1e-6;
};

/// A^n(x), including the inverse branch for n < 0.
ProductResult cocycle_product(const LinearCocycle& c, const Point& x, long n,
                              const ProductOptions& opts = {});
ProductResult cocycle_product(const CocycleField& a, const SkewProduct& f, const Point& x, long n,
                              const ProductOptions& opts = {});

struct HolderEstimate {
  double estimate = 0.0;
  double sup_norm = 0.0;
  double quotient = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
};

/// Lower bound for ||A||_alpha from `samples` random nearby pairs. The
/// sample sequence is a prefix-stable function of the seed.
HolderEstimate holder_norm_estimate(const CocycleField& a, int samples, std::uint64_t seed);

/// Generator of sp(2d): J H with H symmetric.
Mat hamiltonian_from_symmetric(const Mat& h);

/// Random cocycle with `factors` generators J H (||H|| ~ scale) and psi of
/// `modes` random Fourier terms; used by property tests.
CocycleField random_cocycle(int half_dim, int factors, int modes, double scale,
                            std::mt19937_64& rng, double alpha = 1.0);

}  // namespace cocycle_lab
