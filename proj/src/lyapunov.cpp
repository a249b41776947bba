#include "cocycle_lab/lyapunov.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "cocycle_lab/errors.hpp"

namespace cocycle_lab {

namespace {

Mat random_frame(int dim, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(dim, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < dim; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(dim, k);
}

// Orthonormalizes q in place and adds log|R_ii| to logs (when given).
void reorthonormalize(Mat& q, Eigen::VectorXd* logs) {
  const int k = static_cast<int>(q.cols());
  Eigen::HouseholderQR<Mat> qr(q);
  const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Mat out = qr.householderQ() * Mat::Identity(q.rows(), k);
  for (int i = 0; i < k; ++i) {
    if (r(i, i) < 0) out.col(i) = -out.col(i);
    if (logs) (*logs)(i) += std::log(std::abs(r(i, i)));
  }
  q = std::move(out);
}

void check_finite(const Mat& q, int interval) {
  if (!q.allFinite()) {
    std::ostringstream os;
    os << "non-finite frame during QR iteration; decrease the re-orthonormalization interval (now "
       << interval << ")";
    throw NumericalDegradation(os.str());
  }
}

}  // namespace

double LyapunovReport::max_stderr() const {
  return stderr_.empty() ? 0.0 : *std::max_element(stderr_.begin(), stderr_.end());
}

std::vector<double> orbit_exponents(const LinearCocycle& c, Point x, const Mat& frame, long n,
                                    long warmup, int reortho_interval) {
  if (n < 1) throw InvalidArgument("lyapunov iterations must be >= 1");
  Mat q = frame;
  const int k = static_cast<int>(q.cols());
  for (long i = 1; i <= warmup; ++i) {
    q = c.matrix_at(x) * q;
    x = c.advance(x);
    if (i % reortho_interval == 0 || i == warmup) {
      check_finite(q, reortho_interval);
      reorthonormalize(q, nullptr);
    }
  }
  Eigen::VectorXd logs = Eigen::VectorXd::Zero(k);
  for (long i = 1; i <= n; ++i) {
    q = c.matrix_at(x) * q;
    x = c.advance(x);
    if (i % reortho_interval == 0 || i == n) {
      check_finite(q, reortho_interval);
      reorthonormalize(q, &logs);
    }
  }
  std::vector<double> out(k);
  for (int i = 0; i < k; ++i) out[i] = logs(i) / static_cast<double>(n);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

LyapunovReport lyapunov_spectrum(const LinearCocycle& c, const LyapunovOptions& opts) {
  if (opts.n < 1) throw InvalidArgument("lyapunov iterations must be >= 1");
  if (opts.orbits < 1) throw InvalidArgument("need at least one orbit");
  const int dim = c.dim();
  const int interval = opts.reortho_interval > 0 ? opts.reortho_interval : (dim <= 4 ? 1 : 5);
  const long warmup = opts.warmup >= 0 ? opts.warmup : opts.n / 100;

  std::vector<std::vector<double>> per_orbit(opts.orbits);
  std::vector<std::exception_ptr> failures(opts.orbits);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int o = next++; o < opts.orbits; o = next++) {
      try {
        std::seed_seq seq{static_cast<std::uint32_t>(opts.seed),
                          static_cast<std::uint32_t>(opts.seed >> 32),
                          static_cast<std::uint32_t>(o)};
        std::mt19937_64 rng(seq);
        const Point x = c.sample(rng);
        const Mat frame = random_frame(dim, dim, rng);
        per_orbit[o] = orbit_exponents(c, x, frame, opts.n, warmup, interval);
      } catch (...) {
        failures[o] = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(opts.jobs, 1, opts.orbits);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  LyapunovReport rep;
  rep.n = opts.n;
  rep.orbits = opts.orbits;
  rep.seed = opts.seed;
  rep.reortho_interval = interval;
  rep.measure = c.measure();
  rep.exponents.assign(dim, 0.0);
  rep.stderr_.assign(dim, 0.0);
  for (const auto& e : per_orbit)
    for (int i = 0; i < dim; ++i) rep.exponents[i] += e[i] / opts.orbits;
  if (opts.orbits > 1) {
    for (int i = 0; i < dim; ++i) {
      double ss = 0.0;
      for (const auto& e : per_orbit) ss += (e[i] - rep.exponents[i]) * (e[i] - rep.exponents[i]);
      rep.stderr_[i] = std::sqrt(ss / (opts.orbits - 1)) / std::sqrt(double(opts.orbits));
    }
  }
  for (int i = 0; i < dim; ++i)
    rep.symmetry_defect =
        std::max(rep.symmetry_defect, std::abs(rep.exponents[i] + rep.exponents[dim - 1 - i]));
  rep.per_orbit = std::move(per_orbit);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct Push {
  Subspace space = Subspace::zero(2);
  double min_rate = 0.0;
};

// Pushes a random half-dimensional frame along the recorded orbit, forward
// (E^u estimate at the orbit end) or backward (E^s estimate at its start).
Push push_frame(const LinearCocycle& c, const Point& x, long n, bool forward, std::uint64_t seed) {
  const int dim = c.dim();
  const int k = dim / 2;
  std::mt19937_64 rng(seed ^ (forward ? 0x9e3779b97f4a7c15ULL : 0xc2b2ae3d27d4eb4fULL));
  Mat q = random_frame(dim, k, rng);
  Eigen::VectorXd logs = Eigen::VectorXd::Zero(k);
  const SymplecticForm form(k);
  std::vector<Point> orbit(n);
  Point y = x;
  if (forward) {
    for (long i = 0; i < n; ++i) orbit[i] = y = c.retreat(y);  // orbit[i] = f^{-(i+1)} x
    for (long i = n - 1; i >= 0; --i) {
      q = c.matrix_at(orbit[i]) * q;
      reorthonormalize(q, &logs);
    }
  } else {
    for (long i = 0; i < n; ++i) {
      orbit[i] = y;  // orbit[i] = f^i x
      y = c.advance(y);
    }
    for (long i = n - 1; i >= 0; --i) {
      q = form.symplectic_inverse(c.matrix_at(orbit[i])) * q;
      reorthonormalize(q, &logs);
    }
  }
  check_finite(q, 1);
  return {Subspace::span(q), logs.minCoeff() / static_cast<double>(n)};
}

}  // namespace

OseledetsFrame oseledets_frame(const LinearCocycle& c, const Point& x,
                               const OseledetsOptions& opts) {
  if (opts.n < 2) throw InvalidArgument("oseledets frame needs n >= 2");
  const int dim = c.dim();
  OseledetsFrame fr;
  fr.x = x;
  const Push u = push_frame(c, x, opts.n, true, opts.seed);
  const Push s = push_frame(c, x, opts.n, false, opts.seed);
  fr.finite_time_gap = std::min(u.min_rate, s.min_rate);
  if (fr.finite_time_gap < std::max(opts.gap_floor, opts.gap_scale / double(opts.n))) {
    fr.degenerate = true;
    fr.unstable = fr.stable = Subspace::whole(dim);
    fr.converged = true;
    return fr;
  }
  fr.unstable = u.space;
  fr.stable = s.space;
  const long half = opts.n / 2;
  const Push u2 = push_frame(c, x, half, true, opts.seed);
  const Push s2 = push_frame(c, x, half, false, opts.seed);
  fr.convergence_residual =
      std::max(subspace_angle(u.space, u2.space), subspace_angle(s.space, s2.space));
  fr.converged = fr.convergence_residual <= opts.residual_threshold;
  if (opts.with_equivariance) {
    OseledetsOptions next = opts;
    next.with_equivariance = false;
    const OseledetsFrame at_fx = oseledets_frame(c, c.advance(x), next);
    const Mat a = c.matrix_at(x);
    if (at_fx.degenerate) {
      fr.equivariance_residual = M_PI / 2;
    } else {
      fr.equivariance_residual =
          std::max(subspace_angle(fr.unstable.mapped(a), at_fx.unstable),
                   subspace_angle(fr.stable.mapped(a), at_fx.stable));
    }
  }
  return fr;
}

}  // namespace cocycle_lab
