#include "cocycle_lab/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cocycle_lab/errors.hpp"

namespace cocycle_lab {

double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 2 && m.cols() == 2) {
    // Closed form for 2x2: sigma_max^2 = (F + sqrt(F^2 - 4 det^2)) / 2.
    const double f = m.squaredNorm();
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::max(0.0, f * f - 4.0 * det * det);
    return std::sqrt(0.5 * (f + std::sqrt(disc)));
  }
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

SymplecticForm::SymplecticForm(int half_dim) : d_(half_dim) {
  if (half_dim < 1) throw InvalidArgument("symplectic form needs half_dim >= 1");
  j_ = Mat::Zero(2 * d_, 2 * d_);
  j_.topRightCorner(d_, d_) = Mat::Identity(d_, d_);
  j_.bottomLeftCorner(d_, d_) = -Mat::Identity(d_, d_);
}

double SymplecticForm::drift(const Mat& m) const {
  return op_norm(m.transpose() * j_ * m - j_);
}

Mat SymplecticForm::symplectic_inverse(const Mat& m) const {
  return -j_ * m.transpose() * j_;
}

bool SymplecticForm::is_hamiltonian(const Mat& s, double tol) const {
  if (s.rows() != dim() || s.cols() != dim()) return false;
  const double scale = std::max(1.0, op_norm(s));
  return op_norm(s.transpose() * j_ + j_ * s) <= tol * scale;
}

SymplecticMatrix SymplecticMatrix::certify(Mat m, double tol) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0 || m.rows() == 0)
    throw DimensionMismatch("symplectic matrix must be square of even size");
  if (!m.allFinite()) throw NumericalDegradation("non-finite entries in matrix");
  const SymplecticForm form(static_cast<int>(m.rows()) / 2);
  const double drift = form.drift(m);
  const double norm = op_norm(m);
  const double rel = drift / std::max(1.0, norm * norm);
  if (rel > tol) {
    std::ostringstream os;
    os << "matrix fails symplectic certification: relative drift " << rel << " > " << tol;
    throw NumericalDegradation(os.str());
  }
  return SymplecticMatrix(std::move(m), drift);
}

SymplecticMatrix SymplecticMatrix::identity(int dim) {
  return SymplecticMatrix(Mat::Identity(dim, dim), 0.0);
}

double SymplecticMatrix::relative_drift() const {
  const double n = op_norm(m_);
  return drift_ / std::max(1.0, n * n);
}

SymplecticMatrix SymplecticMatrix::inverse() const {
  const SymplecticForm form(half_dim());
  return SymplecticMatrix(form.symplectic_inverse(m_), drift_);
}

SymplecticMatrix SymplecticMatrix::operator*(const SymplecticMatrix& rhs) const {
  if (dim() != rhs.dim()) throw DimensionMismatch("symplectic product of different sizes");
  Mat p = m_ * rhs.m_;
  const SymplecticForm form(half_dim());
  const double drift = form.drift(p);
  return SymplecticMatrix(std::move(p), drift);
}

double SymplecticMatrix::distance_to_identity() const {
  return op_norm(m_ - Mat::Identity(dim(), dim()));
}

// ---------------------------------------------------------------------------
// Subspaces

Subspace Subspace::span(const Mat& spanning, double rank_tol) {
  const int ambient = static_cast<int>(spanning.rows());
  if (spanning.cols() == 0) return zero(ambient);
  Eigen::JacobiSVD<Mat> svd(spanning, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return zero(ambient);
  int rank = 0;
  while (rank < s.size() && s(rank) > rank_tol * s(0)) ++rank;
  return Subspace(ambient, svd.matrixU().leftCols(rank));
}

Subspace Subspace::zero(int ambient) { return Subspace(ambient, Mat(ambient, 0)); }

Subspace Subspace::whole(int ambient) {
  return Subspace(ambient, Mat::Identity(ambient, ambient));
}

Subspace Subspace::coordinate(int ambient, std::span<const int> axes) {
  Mat b = Mat::Zero(ambient, static_cast<Eigen::Index>(axes.size()));
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] < 0 || axes[i] >= ambient) throw InvalidArgument("coordinate axis out of range");
    b(axes[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return span(b);
}

Subspace Subspace::mapped(const Mat& m) const {
  if (m.cols() != ambient_) throw DimensionMismatch("map does not act on this subspace");
  if (dim() == 0) return zero(static_cast<int>(m.rows()));
  return span(m * basis_);
}

double Subspace::angle_to(const Vec& u) const {
  const double n = u.norm();
  if (n == 0.0) throw DegenerateInput("angle to a zero vector");
  if (dim() == 0) return M_PI / 2;
  const Vec r = u - basis_ * (basis_.transpose() * u);
  return std::asin(std::min(1.0, r.norm() / n));
}

double subspace_angle(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) throw DimensionMismatch("subspaces in different spaces");
  if (a.dim() != b.dim()) return M_PI / 2;
  if (a.dim() == 0) return 0.0;
  const Mat r = a.basis() - b.basis() * (b.basis().transpose() * a.basis());
  return std::asin(std::min(1.0, op_norm(r)));
}

double subspace_distance(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) throw DimensionMismatch("subspaces in different spaces");
  return op_norm(a.projector() - b.projector());
}

namespace {

Mat concat(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    throw DimensionMismatch("subspaces live in different ambient spaces");
  Mat c(v.ambient_dim(), v.dim() + w.dim());
  c << v.basis(), w.basis();
  return c;
}

}  // namespace

int intersection_dim(const Subspace& v, const Subspace& w, double tol) {
  const Mat c = concat(v, w);
  if (v.dim() == 0 || w.dim() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(c);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) >= tol * s(0)) ++rank;
  return static_cast<int>(c.cols()) - rank;
}

Subspace intersection(const Subspace& v, const Subspace& w, double tol) {
  const Mat c = concat(v, w);
  if (v.dim() == 0 || w.dim() == 0) return Subspace::zero(v.ambient_dim());
  Eigen::JacobiSVD<Mat> svd(c, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const Eigen::Index cols = c.cols();
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < cols; ++i) {
    const double si = i < s.size() ? s(i) : 0.0;
    if (si < tol * s(0)) null_cols.push_back(i);
  }
  Mat vecs(v.ambient_dim(), static_cast<Eigen::Index>(null_cols.size()));
  for (std::size_t k = 0; k < null_cols.size(); ++k) {
    const Vec coeff = svd.matrixV().col(null_cols[k]).head(v.dim());
    vecs.col(static_cast<Eigen::Index>(k)) = v.basis() * coeff;
  }
  return Subspace::span(vecs, 1e-6);
}

double separation_margin(const Subspace& v, const Subspace& w) {
  const Mat c = concat(v, w);
  if (v.dim() == 0 || w.dim() == 0) return 1.0;
  if (c.cols() > c.rows()) return 0.0;
  Eigen::JacobiSVD<Mat> svd(c);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

Subspace symplectic_complement(const Subspace& v, const SymplecticForm& form) {
  if (v.ambient_dim() != form.dim()) throw DimensionMismatch("subspace/form dimension mismatch");
  const int n = form.dim();
  if (v.dim() == 0) return Subspace::whole(n);
  // omega(u, v_i) = (J v_i)^T u, so the complement is (J V)^perp.
  const Mat jv = form.matrix() * v.basis();
  Eigen::JacobiSVD<Mat> svd(jv.transpose(), Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-12 * s(0)) ++rank;
  if (rank == n) return Subspace::zero(n);
  return Subspace::span(svd.matrixV().rightCols(n - rank));
}

// ---------------------------------------------------------------------------
// Transvections

SymplecticMatrix transvection_matrix(const SymplecticForm& form, const Vec& v, double a) {
  if (v.size() != form.dim()) throw DimensionMismatch("transvection direction has wrong size");
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateInput("transvection direction is zero");
  const Vec u = v / n;
  // tau(x) = x + a (x^T J u) u = (I - a u u^T J) x.
  Mat m = Mat::Identity(form.dim(), form.dim()) - a * u * (u.transpose() * form.matrix());
  return SymplecticMatrix::certify(std::move(m), 1e-12);
}

SymplecticMatrix transvection_matrix(const SymplecticForm& form, const Transvection& t) {
  return transvection_matrix(form, t.direction, t.strength);
}

SymplecticMatrix transvection_product(const SymplecticForm& form,
                                      std::span<const Transvection> factors) {
  Mat m = Mat::Identity(form.dim(), form.dim());
  for (const auto& t : factors) m = m * transvection_matrix(form, t).matrix();
  return SymplecticMatrix::certify(std::move(m));
}

Mat block_rotation(int half_dim, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const int d = half_dim;
  Mat r(2 * d, 2 * d);
  r << c * Mat::Identity(d, d), s * Mat::Identity(d, d), -s * Mat::Identity(d, d),
      c * Mat::Identity(d, d);
  return r;
}

// ---------------------------------------------------------------------------
// Separation

namespace {

void check_complementary(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    throw DimensionMismatch("subspaces live in different ambient spaces");
  if (v.ambient_dim() % 2 != 0) throw DimensionMismatch("ambient dimension must be even");
  if (v.dim() + w.dim() != v.ambient_dim()) {
    std::ostringstream os;
    os << "subspaces are not of complementary dimension: " << v.dim() << " + " << w.dim()
       << " != " << v.ambient_dim();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

SeparationResult separate_pair(const Subspace& v, const Subspace& w, double delta,
                               std::uint64_t seed, const SeparationOptions& opts) {
  check_complementary(v, w);
  if (!(delta > 0.0)) throw InvalidArgument("separate_pair needs delta > 0");
  const SymplecticForm form(v.ambient_dim() / 2);
  const int n = form.dim();

  SeparationResult result;
  result.seed = seed;
  result.sigma = SymplecticMatrix::identity(n);
  result.initial_dim = intersection_dim(v, w, opts.intersection_tol);
  if (result.initial_dim == 0) return result;

  std::mt19937_64 rng(seed);
  // Largest strength keeping ||sigma_i - I|| = strength <= delta / k.
  const double strength = delta / result.initial_dim * (1.0 - 1e-12);

  Subspace current = v;
  int k = result.initial_dim;
  int retries = 0;
  while (k > 0) {
    const Subspace common = intersection(current, w, opts.intersection_tol);
    const Subspace sum = Subspace::span(
        (Mat(n, current.dim() + w.dim()) << current.basis(), w.basis()).finished(), 1e-10);
    const Subspace omega_perp = symplectic_complement(common, form);

    SeparationStep step;
    step.dim_before = k;
    Vec u0;
    bool found = false;
    for (int s = 0; s < opts.max_samples; ++s) {
      u0 = random_unit_vector(n, rng);
      if (sum.dim() < n && sum.angle_to(u0) < opts.avoid_angle) {
        ++step.rejected_samples;
        continue;
      }
      if (omega_perp.dim() < n && omega_perp.angle_to(u0) < opts.avoid_angle) {
        ++step.rejected_samples;
        continue;
      }
      found = true;
      break;
    }
    if (!found) {
      std::ostringstream os;
      os << "no transversal direction found after " << opts.max_samples
         << " samples (seed " << seed << ")";
      throw SearchFailure(os.str());
    }

    const Transvection t{u0, strength};
    const SymplecticMatrix tau = transvection_matrix(form, t);
    const Subspace next = current.mapped(tau.matrix());
    const int k_next = intersection_dim(next, w, opts.intersection_tol);
    if (k_next >= k) {
      if (++retries > opts.max_retries) {
        std::ostringstream os;
        os << "transvection failed to reduce the intersection (dim " << k << ") after "
           << opts.max_retries << " retries (seed " << seed << ")";
        throw SearchFailure(os.str());
      }
      continue;
    }
    step.u0 = u0;
    step.strength = strength;
    step.dim_after = k_next;
    result.trace.push_back(step);
    // The newest factor acts last, so it goes on the left.
    result.factors.insert(result.factors.begin(), t);
    result.sigma = tau * result.sigma;
    current = next;
    k = k_next;
  }
  return result;
}

SeparationResult separate_many(std::span<const std::pair<Subspace, Subspace>> pairs,
                               double delta, std::uint64_t seed,
                               const SeparationOptions& opts) {
  if (!(delta > 0.0)) throw InvalidArgument("separate_many needs delta > 0");
  if (pairs.empty()) throw InvalidArgument("separate_many needs at least one pair");
  for (const auto& [v, w] : pairs) check_complementary(v, w);
  const int n = pairs.front().first.ambient_dim();
  for (const auto& [v, w] : pairs)
    if (v.ambient_dim() != n) throw DimensionMismatch("pairs live in different ambient spaces");

  SeparationResult total;
  total.seed = seed;
  total.sigma = SymplecticMatrix::identity(n);
  for (const auto& [v, w] : pairs) total.initial_dim += intersection_dim(v, w, opts.intersection_tol);

  // Budgets b_j = log(1 + delta) 2^{-(j+1)} keep prod(1 + b_j) - 1 <= delta.
  const double log_budget = std::log1p(delta);
  std::uint64_t attempt_seed = seed;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    double budget = log_budget * std::ldexp(1.0, -static_cast<int>(j) - 1);
    bool placed = false;
    for (int attempt = 0; attempt <= opts.max_retries && !placed; ++attempt, budget *= 0.5) {
      const Subspace moved = pairs[j].first.mapped(total.sigma.matrix());
      SeparationResult step =
          separate_pair(moved, pairs[j].second, budget, attempt_seed++, opts);
      const SymplecticMatrix candidate = step.sigma * total.sigma;
      bool all_separated = true;
      for (std::size_t i = 0; i <= j; ++i) {
        const Subspace img = pairs[i].first.mapped(candidate.matrix());
        if (intersection_dim(img, pairs[i].second, opts.intersection_tol) != 0) {
          all_separated = false;
          break;
        }
      }
      if (!all_separated) continue;
      total.factors.insert(total.factors.begin(), step.factors.begin(), step.factors.end());
      total.trace.insert(total.trace.end(), step.trace.begin(), step.trace.end());
      total.sigma = candidate;
      placed = true;
    }
    if (!placed) {
      std::ostringstream os;
      os << "margin collapse: could not separate pair " << j << " without undoing an earlier"
         << " pair after " << opts.max_retries << " retries (seed " << seed << ")";
      throw SearchFailure(os.str());
    }
  }
  return total;
}

}  // namespace cocycle_lab
