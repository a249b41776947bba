#include "cocycle_lab/holonomy.hpp"

#include <cmath>
#include <sstream>

#include "cocycle_lab/errors.hpp"

namespace cocycle_lab {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(const std::vector<double>& y, int lo, int hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = hi - lo + 1;
  for (int n = lo; n <= hi; ++n) {
    sx += n;
    sy += y[n];
    sxx += double(n) * n;
    sxy += n * y[n];
  }
  const double den = m * sxx - sx * sx;
  LineFit f;
  f.slope = (m * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / m;
  return f;
}

}  // namespace

FiberBunchingCertificate certify_fiber_bunching(const CocycleField& a, const SkewProduct& f,
                                                int horizon, int grid) {
  if (horizon < 10) throw InvalidArgument("fiber bunching horizon must be >= 10");
  if (grid < 1) throw InvalidArgument("fiber bunching grid must be >= 1");
  FiberBunchingCertificate cert;
  cert.alpha = a.alpha();
  cert.grid_resolution = grid;
  cert.horizon = horizon;
  const double lognu = a.alpha() * std::log(std::min(f.nu(), f.nu_hat()));
  cert.log_sup.assign(horizon + 1, -HUGE_VAL);
  cert.log_sup[0] = 0.0;
  const int dim = a.dim();
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      for (int k = 0; k < grid; ++k) {
        Point y{{(i + 0.5) / grid, (j + 0.5) / grid}, (k + 0.5) / grid};
        Mat p = Mat::Identity(dim, dim);
        for (int n = 1; n <= horizon; ++n) {
          p = a.evaluate(y) * p;
          y = f.step(y);
          // ||P^{-1}|| = ||P|| for symplectic P.
          const double v = 2.0 * std::log(op_norm(p)) + n * lognu;
          cert.log_sup[n] = std::max(cert.log_sup[n], v);
        }
      }
  const LineFit all = fit_line(cert.log_sup, 0, horizon);
  const LineFit tail = fit_line(cert.log_sup, horizon / 2, horizon);
  cert.theta_rate = std::exp(all.slope);
  cert.tail_theta = std::exp(tail.slope);
  double c3 = 0.0;
  for (int n = 0; n <= horizon; ++n) c3 = std::max(c3, std::exp(cert.log_sup[n] - n * all.slope));
  cert.c3 = c3;
  cert.pass = cert.theta_rate <= 0.95 && tail.slope < 0.0;
  if (cert.pass) {
    const double nu = std::min(f.nu(), f.nu_hat());
    const double c_dist = 1.0 + f.theta().lipschitz_bound() / (1.0 - nu);
    cert.holonomy_constant = cert.c3 * a.sup_bound() * a.lipschitz_bound() *
                             std::pow(kSpaceDiameter, 1.0 - a.alpha()) *
                             std::pow(c_dist, a.alpha()) / (1.0 - cert.theta_rate);
  }
  return cert;
}

Point leaf_pair_target(const SkewProduct& f, const LeafPair& pair) {
  const auto& g = f.base();
  const Eigen::Vector2d dir = pair.kind == LeafKind::Stable ? g.e_s() : g.e_u();
  return {wrap_torus(pair.from.x + pair.coef * dir),
          wrap_unit(pair.from.t + center_shift_along(f, pair.from.x, pair.coef, pair.kind))};
}

HolonomyOperator strong_holonomy(const CocycleField& a, const SkewProduct& f,
                                 const FiberBunchingCertificate& cert, const LeafPair& pair,
                                 const HolonomyOptions& opts) {
  if (!cert.pass)
    throw CertificateRequired("strong holonomy needs a passing fiber-bunching certificate");
  const auto& g = f.base();
  const int dim = a.dim();
  const SymplecticForm& form = a.form();
  const bool stable = pair.kind == LeafKind::Stable;

  HolonomyOperator out;
  out.kind = pair.kind;
  out.p = pair.from;
  out.q = leaf_pair_target(f, pair);
  out.distance = point_distance(out.p, out.q);
  out.holder_constant = cert.holonomy_constant;

  const Eigen::Vector2d dir = stable ? g.e_s() : g.e_u();
  const double rate = stable ? g.mu_s() : 1.0 / g.mu_u();

  // Base orbit of p (index k is f^k p, or f^{-k} p for the unstable case,
  // k >= 1), the base offsets p - q, and the fiber offsets from tail sums of
  // the center-shift series so they stay accurate as they shrink.
  const int depth = opts.n_max + 200;
  std::vector<Eigen::Vector2d> xs(depth + 1), off(depth + 1);
  std::vector<double> c(depth + 2, 0.0);
  xs[0] = pair.from.x;
  double scale = pair.coef;
  for (int k = 0; k <= depth; ++k) {
    if (k > 0) {
      xs[k] = stable ? g.apply(xs[k - 1]) : g.apply_inverse(xs[k - 1]);
      scale *= rate;
    }
    off[k] = -scale * dir;
    c[k] = f.theta().difference(Point{xs[k], 0.0}, Eigen::Vector3d(off[k](0), off[k](1), 0.0));
  }
  std::vector<double> tail(depth + 2, 0.0);  // tail[k] = sum_{n >= k} c[n]
  for (int k = depth; k >= 0; --k) tail[k] = tail[k + 1] + c[k];

  const Mat id = Mat::Identity(dim, dim);
  Mat h = id;
  Mat left = id;   // Q_k^{-1} (stable) or U_k^{-1} (unstable)
  Mat right = id;  // P_k (stable) or V_k (unstable)
  std::vector<Mat> history{h};
  int small_run = 0;
  double tp = pair.from.t;
  for (int k = 0; k < opts.n_max; ++k) {
    const int idx = stable ? k : k + 1;
    if (!stable) tp -= f.theta()(xs[idx]);
    // Stable: t_p - t_q = -sum_{n >= k} c_n. Unstable: sum_{n > k} c_{-n}.
    const double dt = stable ? -tail[idx] : tail[idx + 1];
    const Point pk{xs[idx], wrap_unit(tp)};
    const Point qk{wrap_torus(xs[idx] - off[idx]), wrap_unit(tp - dt)};
    const Mat ap = a.evaluate(pk), aq = a.evaluate(qk);
    const Mat dq = a.quotient_minus_identity(pk, qk, Eigen::Vector3d(off[idx](0), off[idx](1), dt));
    double term_norm = 0.0;
    if (stable) {
      if (!dq.isZero(0.0)) {
        const Mat term = left * dq * right;
        term_norm = op_norm(term);
        h += term;
      }
      right = ap * right;
      left = left * form.symplectic_inverse(aq);
      tp += f.theta()(xs[idx]);
    } else {
      const Mat ap_inv = form.symplectic_inverse(ap);
      if (!dq.isZero(0.0)) {
        // A(q) A(p)^{-1} - I = -A(q) (A(q)^{-1} A(p) - I) A(p)^{-1}
        const Mat term = -(left * aq * dq * ap_inv * right);
        term_norm = op_norm(term);
        h += term;
      }
      left = left * aq;
      right = ap_inv * right;
    }
    out.residual_trace.push_back(term_norm);
    history.push_back(h);
    const int n = k + 1;
    small_run = term_norm < opts.term_tol ? small_run + 1 : 0;
    const double residual = op_norm(h - history[n / 2]);
    if (n >= opts.n_min && small_run >= 3 && residual <= opts.residual_max) {
      out.n_used = n;
      out.residual = residual;
      out.matrix = SymplecticMatrix::certify(h, 1e-8);
      return out;
    }
    if (!h.allFinite()) break;
  }
  std::ostringstream os;
  os << "holonomy series did not converge within " << opts.n_max << " terms; last terms:";
  const std::size_t m = out.residual_trace.size();
  for (std::size_t i = m > 5 ? m - 5 : 0; i < m; ++i) os << ' ' << out.residual_trace[i];
  throw ConvergenceFailure(os.str());
}

HolonomyOperator strong_holonomy(const CocycleField& a, const SkewProduct& f,
                                 const FiberBunchingCertificate& cert, const Point& p,
                                 const Point& q, LeafKind kind, const HolonomyOptions& opts) {
  const double shift = center_holonomy_shift(f, p.x, q.x, kind);
  if (std::abs(wrap_centered(q.t - p.t - shift)) > 1e-9)
    throw NotOnLeaf("fiber coordinate of q does not match the center holonomy of p");
  const Eigen::Vector2d ab = f.base().eigen_coordinates(torus_displacement(p.x, q.x));
  const double coef = kind == LeafKind::Stable ? ab(1) : ab(0);
  auto out = strong_holonomy(a, f, cert, LeafPair{p, coef, kind}, opts);
  out.q = q;
  out.distance = point_distance(p, q);
  return out;
}

HomoclinicLoop make_loop(const SkewProduct& f, const PeriodicLeaf& leaf, int homoclinic_index,
                         int budget) {
  if (leaf.period != 1) throw InvalidArgument("homoclinic loops are built over fixed points");
  HomoclinicLoop loop;
  loop.leaf = leaf;
  const Eigen::Vector2d p = leaf.base.to_vector();
  loop.z = find_homoclinic(f.base(), p, homoclinic_index, budget);
  loop.shift_u = center_shift_along(f, p, loop.z.coef_u, LeafKind::Unstable);
  loop.shift_s = -center_shift_along(f, p, loop.z.coef_s, LeafKind::Stable);
  loop.shift = loop.shift_u + loop.shift_s;
  return loop;
}

LoopHolonomy loop_holonomy(const CocycleField& a, const SkewProduct& f,
                           const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                           double t, const HolonomyOptions& opts) {
  const Eigen::Vector2d p = loop.leaf.base.to_vector();
  LoopHolonomy out;
  out.unstable =
      strong_holonomy(a, f, cert, LeafPair{{p, wrap_unit(t)}, loop.z.coef_u, LeafKind::Unstable}, opts);
  out.stable =
      strong_holonomy(a, f, cert, LeafPair{{p, loop.h(t)}, loop.z.coef_s, LeafKind::Stable}, opts);
  out.matrix = SymplecticMatrix::certify(
      out.stable.matrix.inverse().matrix() * out.unstable.matrix.matrix(), 1e-8);
  return out;
}

LoopIterate iterate_loop(const CocycleField& a, const SkewProduct& f,
                         const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                         double t, int j, const HolonomyOptions& opts) {
  if (j < 1) throw InvalidArgument("loop iterate needs j >= 1");
  LoopIterate out;
  out.t = wrap_unit(t);
  Mat m = Mat::Identity(a.dim(), a.dim());
  for (int i = 0; i < j; ++i) {
    m = loop_holonomy(a, f, cert, loop, out.t, opts).matrix.matrix() * m;
    out.t = loop.h(out.t);
  }
  out.matrix = SymplecticMatrix::certify(std::move(m), 1e-8);
  return out;
}

double loop_continuity_modulus(const CocycleField& a, const SkewProduct& f,
                               const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                               int grid, const HolonomyOptions& opts) {
  if (grid < 2) throw InvalidArgument("continuity grid must be >= 2");
  std::vector<Mat> hs;
  for (int i = 0; i < grid; ++i)
    hs.push_back(loop_holonomy(a, f, cert, loop, double(i) / grid, opts).matrix.matrix());
  double w = 0.0;
  for (int i = 0; i < grid; ++i) w = std::max(w, op_norm(hs[(i + 1) % grid] - hs[i]));
  return w;
}

}  // namespace cocycle_lab
