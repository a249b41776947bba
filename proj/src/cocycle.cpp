#include "cocycle_lab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "cocycle_lab/errors.hpp"

namespace cocycle_lab {

namespace {

double smooth_ramp(double r, double outer) {
  // 1 on [0, outer/2], C^1 cubic down to 0 at outer.
  const double inner = 0.5 * outer;
  if (r <= inner) return 1.0;
  if (r >= outer) return 0.0;
  const double s = (r - inner) / inner;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

bool factor_is_constant(const CocycleFactor& f) {
  if (const auto* e = std::get_if<ExpFactor>(&f)) return !e->winds() && e->psi.is_constant();
  if (std::holds_alternative<ConstFactor>(f)) return true;
  return std::get<BumpFactor>(f).factors.empty();
}

double winding_sup(const ExpFactor& e) {
  return std::abs(e.winding[0]) + std::abs(e.winding[1]) + std::abs(e.winding[2]);
}

}  // namespace

double ExpFactor::exponent(const Point& p) const {
  double v = psi(p);
  if (winds()) v += winding[0] * p.x(0) + winding[1] * p.x(1) + winding[2] * p.t;
  return v;
}

double BumpFactor::weight(const Point& p) const {
  const double radial = smooth_ramp(torus_distance(p.x, center), radius);
  if (radial == 0.0 || arc_halfwidth >= 0.5) return radial;
  return radial * smooth_ramp(std::abs(wrap_centered(p.t - arc_center)), arc_halfwidth);
}

double BumpFactor::weight_lipschitz() const {
  double lip = 3.0 / radius;
  if (arc_halfwidth < 0.5) lip += 3.0 / arc_halfwidth;
  return lip;
}

Mat hamiltonian_exp(const Mat& x) {
  if (x.rows() == 2) {
    // X^2 = -det(X) I for traceless 2x2 X.
    const double q = -(x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0));
    double c, s;
    if (std::abs(q) < 1e-8) {
      c = 1.0 + q / 2.0 + q * q / 24.0;
      s = 1.0 + q / 6.0 + q * q / 120.0;
    } else if (q > 0) {
      const double r = std::sqrt(q);
      c = std::cosh(r);
      s = std::sinh(r) / r;
    } else {
      const double r = std::sqrt(-q);
      c = std::cos(r);
      s = std::sin(r) / r;
    }
    return c * Mat::Identity(2, 2) + s * x;
  }
  return x.exp();
}

Mat hamiltonian_expm1(const Mat& x) {
  const int n = static_cast<int>(x.rows());
  if (n == 2) {
    const double q = -(x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0));
    double cm1, s;
    if (std::abs(q) < 1e-8) {
      cm1 = q / 2.0 + q * q / 24.0;
      s = 1.0 + q / 6.0 + q * q / 120.0;
    } else if (q > 0) {
      const double r = std::sqrt(q);
      const double h = std::sinh(r / 2.0);
      cm1 = 2.0 * h * h;
      s = std::sinh(r) / r;
    } else {
      const double r = std::sqrt(-q);
      const double h = std::sin(r / 2.0);
      cm1 = -2.0 * h * h;
      s = std::sin(r) / r;
    }
    return cm1 * Mat::Identity(2, 2) + s * x;
  }
  const double nx = x.cwiseAbs().rowwise().sum().maxCoeff();
  if (nx > 0.5) return x.exp() - Mat::Identity(n, n);
  Mat term = x, sum = x;
  for (int k = 2; k < 40; ++k) {
    term = term * x / double(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-18 * sum.cwiseAbs().maxCoeff()) break;
  }
  return sum;
}

CocycleField::CocycleField(int half_dim, double alpha, std::vector<CocycleFactor> factors)
    : d_(half_dim), alpha_(alpha), form_(half_dim), factors_(std::move(factors)) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("Hoelder exponent must lie in (0, 1]");
  const int n = dim();
  constant_cache_.resize(factors_.size());
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    auto& f = factors_[i];
    if (auto* e = std::get_if<ExpFactor>(&f)) {
      if (e->generator.rows() != n || e->generator.cols() != n)
        throw DimensionMismatch("cocycle generator has the wrong size");
      if (!form_.is_hamiltonian(e->generator)) {
        std::ostringstream os;
        os << "generator " << i << " is not in the symplectic Lie algebra (S^T J + J S != 0)";
        throw InvalidArgument(os.str());
      }
      if (e->winds() && op_norm(hamiltonian_exp(e->generator) - Mat::Identity(n, n)) > 1e-9)
        throw InvalidArgument("a winding factor needs exp(S) = I");
    } else if (auto* c = std::get_if<ConstFactor>(&f)) {
      if (c->matrix.rows() != n || c->matrix.cols() != n)
        throw DimensionMismatch("constant factor has the wrong size");
      SymplecticMatrix::certify(c->matrix);
    } else {
      auto& b = std::get<BumpFactor>(f);
      if (!(b.radius > 0.0)) throw InvalidArgument("bump radius must be positive");
      for (auto& t : b.factors) {
        if (t.direction.size() != n) throw DimensionMismatch("bump transvection has the wrong size");
        const double nn = t.direction.norm();
        if (!(nn > 0.0)) throw DegenerateInput("bump transvection direction is zero");
        t.direction /= nn;
      }
    }
    if (factor_is_constant(f)) constant_cache_[i] = evaluate_factor_uncached(f, Point{});
  }
}

Mat CocycleField::evaluate_factor_uncached(const CocycleFactor& f, const Point& p) const {
  const int n = dim();
  if (const auto* e = std::get_if<ExpFactor>(&f)) return hamiltonian_exp(e->exponent(p) * e->generator);
  if (const auto* c = std::get_if<ConstFactor>(&f)) return c->matrix;
  const auto& b = std::get<BumpFactor>(f);
  Mat m = Mat::Identity(n, n);
  const double w = b.factors.empty() ? 0.0 : b.weight(p);
  if (w == 0.0) return m;
  for (const auto& t : b.factors) {
    const Mat slice =
        Mat::Identity(n, n) - (w * t.strength) * t.direction * (t.direction.transpose() * form_.matrix());
    m = m * slice;
  }
  return m;
}

Mat CocycleField::evaluate(const Point& p) const {
  const int n = dim();
  Mat out = Mat::Identity(n, n);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (constant_cache_[i].size() != 0)
      out = out * constant_cache_[i];
    else
      out = out * evaluate_factor_uncached(factors_[i], p);
  }
  return out;
}

Mat CocycleField::quotient_minus_identity(const Point& p, const Point& q,
                                          const Eigen::Vector3d& d) const {
  const int n = dim();
  Mat delta = Mat::Zero(n, n);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (constant_cache_[i].size() != 0) {
      // F(q) = F(p): delta <- F^{-1} delta F.
      if (!delta.isZero(0.0)) {
        const Mat& f = constant_cache_[i];
        delta = form_.symplectic_inverse(f) * delta * f;
      }
      continue;
    }
    const auto& fac = factors_[i];
    const Mat fp = evaluate_factor_uncached(fac, p);
    const Mat fq = evaluate_factor_uncached(fac, q);
    Mat e;
    if (const auto* ex = std::get_if<ExpFactor>(&fac)) {
      double dpsi = ex->psi.difference(p, d);
      dpsi += ex->winding[0] * d(0) + ex->winding[1] * d(1) + ex->winding[2] * d(2);
      e = hamiltonian_expm1(dpsi * ex->generator);
    } else {
      e = form_.symplectic_inverse(fq) * fp - Mat::Identity(n, n);
    }
    delta = form_.symplectic_inverse(fq) * delta * fp + e;
  }
  return delta;
}

bool CocycleField::is_constant() const {
  return std::all_of(factors_.begin(), factors_.end(), factor_is_constant);
}

namespace {

double factor_sup(const CocycleFactor& f) {
  if (const auto* e = std::get_if<ExpFactor>(&f))
    return std::exp((e->psi.sup_bound() + winding_sup(*e)) * op_norm(e->generator));
  if (const auto* c = std::get_if<ConstFactor>(&f)) return op_norm(c->matrix);
  double s = 1.0;
  for (const auto& t : std::get<BumpFactor>(f).factors) s *= 1.0 + std::abs(t.strength);
  return s;
}

double factor_lipschitz(const CocycleFactor& f) {
  if (const auto* e = std::get_if<ExpFactor>(&f)) {
    const double sn = op_norm(e->generator);
    const double w = std::sqrt(double(e->winding[0]) * e->winding[0] +
                               double(e->winding[1]) * e->winding[1] +
                               double(e->winding[2]) * e->winding[2]);
    return sn * std::exp((e->psi.sup_bound() + winding_sup(*e)) * sn) * (e->psi.lipschitz_bound() + w);
  }
  if (std::holds_alternative<ConstFactor>(f)) return 0.0;
  const auto& b = std::get<BumpFactor>(f);
  if (b.factors.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : b.factors) total += std::abs(t.strength);
  return b.weight_lipschitz() * total * factor_sup(f);
}

}  // namespace

double CocycleField::sup_bound() const {
  double s = 1.0;
  for (const auto& f : factors_) s *= factor_sup(f);
  return s;
}

double CocycleField::lipschitz_bound() const {
  double total = 0.0;
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    double term = factor_lipschitz(factors_[k]);
    if (term == 0.0) continue;
    for (std::size_t j = 0; j < factors_.size(); ++j)
      if (j != k) term *= factor_sup(factors_[j]);
    total += term;
  }
  return total;
}

CocycleField CocycleField::with_prefix(CocycleFactor f) const {
  auto fs = factors_;
  fs.insert(fs.begin(), std::move(f));
  return CocycleField(d_, alpha_, std::move(fs));
}

CocycleField CocycleField::with_suffix(CocycleFactor f) const {
  auto fs = factors_;
  fs.push_back(std::move(f));
  return CocycleField(d_, alpha_, std::move(fs));
}

// ---------------------------------------------------------------------------

Point LinearCocycle::iterate(Point p, long n) const {
  for (long i = 0; i < n; ++i) p = advance(p);
  for (long i = 0; i < -n; ++i) p = retreat(p);
  return p;
}

SkewCocycle::SkewCocycle(CocycleField field, SkewProduct base)
    : field_(std::move(field)), base_(std::move(base)) {}

Point SkewCocycle::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point p;
  p.x(0) = u(rng);
  p.x(1) = u(rng);
  p.t = u(rng);
  return p;
}

LeafCocycle::LeafCocycle(int dim, Eigen::Vector2d base_point, double rotation,
                         std::function<Mat(double)> matrix, std::string measure)
    : dim_(dim),
      base_point_(std::move(base_point)),
      rotation_(rotation),
      matrix_(std::move(matrix)),
      measure_(std::move(measure)) {}

Point LeafCocycle::advance(const Point& p) const {
  return {base_point_, wrap_unit(p.t + rotation_)};
}

Point LeafCocycle::retreat(const Point& p) const {
  return {base_point_, wrap_unit(p.t - rotation_)};
}

Point LeafCocycle::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {base_point_, u(rng)};
}

LeafCocycle restrict_to_leaf(const CocycleField& field, const SkewProduct& f,
                             const PeriodicLeaf& leaf) {
  std::vector<Eigen::Vector2d> orbit;
  std::vector<double> shifts;
  for (const auto& q : leaf.orbit) {
    orbit.push_back(q.to_vector());
    shifts.push_back(f.theta()(q.to_vector()));
  }
  auto matrix = [field, orbit, shifts](double t) {
    Mat m = Mat::Identity(field.dim(), field.dim());
    double s = t;
    for (std::size_t i = 0; i < orbit.size(); ++i) {
      m = field.evaluate(Point{orbit[i], wrap_unit(s)}) * m;
      s += shifts[i];
    }
    return m;
  };
  std::string measure = "lebesgue(S^1)";
  if (!leaf.irrational)
    measure += "; rational rotation " + std::to_string(leaf.rational_num) + "/" +
               std::to_string(leaf.rational_den) + ", fiber measure not unique";
  return LeafCocycle(field.dim(), leaf.base.to_vector(), leaf.rotation, std::move(matrix),
                     std::move(measure));
}

// ---------------------------------------------------------------------------

ProductResult cocycle_product(const LinearCocycle& c, const Point& x, long n,
                              const ProductOptions& opts) {
  const int dim = c.dim();
  const SymplecticForm form(dim / 2);
  Mat p = Mat::Identity(dim, dim);
  ProductResult out;
  auto recertify = [&]() {
    const double norm = op_norm(p);
    double rel = form.drift(p) / std::max(1.0, norm * norm);
    if (rel > opts.correction_threshold) {
      // First-order symplectic polar correction P <- P (3I - P^{-1}_sp P) / 2.
      const Mat q = form.symplectic_inverse(p) * p;
      p = 0.5 * p * (3.0 * Mat::Identity(dim, dim) - q);
      ++out.corrections;
      const double n2 = op_norm(p);
      rel = form.drift(p) / std::max(1.0, n2 * n2);
    }
    out.max_relative_drift = std::max(out.max_relative_drift, rel);
    if (!(rel <= opts.failure_threshold)) {
      std::ostringstream os;
      os << "cocycle product lost symplecticity (relative drift " << rel << ")";
      throw NumericalDegradation(os.str());
    }
  };
  Point y = x;
  const long steps = n >= 0 ? n : -n;
  for (long k = 1; k <= steps; ++k) {
    if (n > 0) {
      p = c.matrix_at(y) * p;
      y = c.advance(y);
    } else {
      y = c.retreat(y);
      p = form.symplectic_inverse(c.matrix_at(y)) * p;
    }
    if (k % opts.recertify_every == 0) recertify();
  }
  recertify();
  out.value = SymplecticMatrix::certify(std::move(p), opts.failure_threshold);
  return out;
}

ProductResult cocycle_product(const CocycleField& a, const SkewProduct& f, const Point& x, long n,
                              const ProductOptions& opts) {
  return cocycle_product(SkewCocycle(a, f), x, n, opts);
}

HolderEstimate holder_norm_estimate(const CocycleField& a, int samples, std::uint64_t seed) {
  if (samples < 2) throw InvalidArgument("holder_norm_estimate needs at least 2 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HolderEstimate est;
  est.samples = samples;
  est.seed = seed;
  for (int i = 0; i < samples; ++i) {
    Point x{{u(rng), u(rng)}, u(rng)};
    Eigen::Vector3d dir(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
    if (dir.norm() < 1e-9) dir = Eigen::Vector3d(1, 0, 0);
    dir.normalize();
    const double r = std::pow(10.0, -1.0 - 2.0 * u(rng));
    Point y{wrap_torus(x.x + r * dir.head<2>()), wrap_unit(x.t + r * dir(2))};
    const Mat ax = a.evaluate(x), ay = a.evaluate(y);
    est.sup_norm = std::max({est.sup_norm, op_norm(ax), op_norm(ay)});
    const double dist = point_distance(x, y);
    if (dist > 0.0)
      est.quotient = std::max(est.quotient, op_norm(ax - ay) / std::pow(dist, a.alpha()));
  }
  est.estimate = est.sup_norm + est.quotient;
  return est;
}

Mat hamiltonian_from_symmetric(const Mat& h) {
  if (h.rows() != h.cols() || h.rows() % 2 != 0) throw DimensionMismatch("need an even square matrix");
  const SymplecticForm form(static_cast<int>(h.rows()) / 2);
  const Mat sym = 0.5 * (h + h.transpose());
  return form.matrix() * sym;
}

CocycleField random_cocycle(int half_dim, int factors, int modes, double scale,
                            std::mt19937_64& rng, double alpha) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> freq(-2, 2);
  std::bernoulli_distribution coin(0.5);
  const int n = 2 * half_dim;
  std::vector<CocycleFactor> fs;
  for (int k = 0; k < factors; ++k) {
    Mat h(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h(i, j) = gauss(rng);
    Mat s = hamiltonian_from_symmetric(h);
    s *= scale / op_norm(s);
    std::vector<FourierTerm> terms;
    for (int m = 0; m < modes; ++m)
      terms.push_back(FourierTerm{u(rng), {freq(rng), freq(rng), freq(rng)}, coin(rng)});
    fs.push_back(ExpFactor{s, TrigPoly(std::move(terms))});
  }
  return CocycleField(half_dim, alpha, std::move(fs));
}

}  // namespace cocycle_lab
