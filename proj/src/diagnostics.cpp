#include "cocycle_lab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cocycle_lab/errors.hpp"

namespace cocycle_lab {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Positive: return "positive";
    case Verdict::Zero: return "zero";
    default: return "inconclusive";
  }
}

namespace {

// Sorted log moduli of the eigenvalues, largest first. The 2x2 symplectic
// case goes through the trace, which keeps parabolic matrices at exactly 0.
std::vector<double> log_eigen_moduli(const Mat& m) {
  if (m.rows() == 2) {
    const double tr = std::abs(m.trace());
    const double r = tr > 2.0 ? std::acosh(tr / 2.0) : 0.0;
    return {r, -r};
  }
  Eigen::EigenSolver<Mat> es(m, false);
  std::vector<double> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) out.push_back(std::log(std::abs(es.eigenvalues()(i))));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

Mat fiber_return(const LeafCocycle& b, double t, std::int64_t den) {
  Mat m = Mat::Identity(b.dim(), b.dim());
  for (std::int64_t i = 0; i < den; ++i) m = b.at(wrap_unit(t + double(i) * b.rotation())) * m;
  return m;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

PinchingVerdict weak_pinching_test(const CocycleField& a, const SkewProduct& f,
                                   const PeriodicLeaf& leaf, const PinchingOptions& opts) {
  const LeafCocycle b = restrict_to_leaf(a, f, leaf);
  const int dim = a.dim();
  PinchingVerdict v;
  v.leaf_point = leaf.base.to_vector();
  v.period = leaf.period;
  v.measure = b.measure();
  v.gap_fractions.assign(dim - 1, 0.0);
  if (leaf.irrational) {
    v.method = "lyapunov";
    LyapunovOptions lo;
    lo.n = opts.n;
    lo.orbits = opts.orbits;
    lo.seed = opts.seed;
    lo.jobs = opts.jobs;
    auto rep = lyapunov_spectrum(b, lo);
    v.estimate = rep.top();
    v.error = rep.top_stderr();
    v.exponents = rep.exponents;
    v.samples = rep.n;
    for (const auto& e : rep.per_orbit)
      for (int i = 0; i + 1 < dim; ++i)
        if (e[i] - e[i + 1] > opts.zero_floor) v.gap_fractions[i] += 1.0 / rep.orbits;
    if (v.estimate > std::max(3.0 * v.error, opts.zero_floor))
      v.verdict = Verdict::Positive;
    else if (v.error <= opts.zero_floor)
      v.verdict = Verdict::Zero;
    else
      v.verdict = Verdict::Inconclusive;
    v.spectrum = std::move(rep);
    return v;
  }

  // Rational rotation: f^{k(p)} fixes the leaf, exponents at t are the log
  // eigenvalue moduli of the return matrix.
  v.method = "eigenvalue";
  const int n = std::max(4, opts.t_grid);
  std::vector<double> top(n);
  std::vector<bool> hyper(n);
  v.exponents.assign(dim, 0.0);
  v.samples = n;
  for (int i = 0; i < n; ++i) {
    const auto logs = log_eigen_moduli(fiber_return(b, double(i) / n, leaf.rational_den));
    for (int k = 0; k < dim; ++k) v.exponents[k] += logs[k] / double(leaf.rational_den) / n;
    top[i] = logs.front() / double(leaf.rational_den);
    hyper[i] = logs.front() > opts.eig_tol;
    for (int k = 0; k + 1 < dim; ++k)
      if (logs[k] - logs[k + 1] > opts.eig_tol) v.gap_fractions[k] += 1.0 / n;
  }
  double mean = 0.0, mean_half = 0.0;
  for (int i = 0; i < n; ++i) {
    mean += top[i] / n;
    if (i % 2 == 0) mean_half += top[i] / (n / 2 + n % 2);
  }
  v.estimate = mean;
  v.error = std::abs(mean - mean_half);
  bool open_arc = false, any = false;
  for (int i = 0; i < n; ++i) {
    any = any || hyper[i];
    open_arc = open_arc || (hyper[i] && hyper[(i + 1) % n]);
  }
  if (!any)
    v.verdict = Verdict::Zero;
  else if (open_arc && v.estimate > 3.0 * v.error)
    v.verdict = Verdict::Positive;
  else
    v.verdict = Verdict::Inconclusive;
  return v;
}

// ---------------------------------------------------------------------------

TwistingVerdict weak_twisting_test(const CocycleField& a, const SkewProduct& f,
                                   const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                                   const TwistingOptions& opts) {
  if (!(opts.epsilon_angle > 0.0)) throw InvalidArgument("twisting angle threshold must be > 0");
  if (opts.j_max < 1 || opts.samples < 1) throw InvalidArgument("twisting needs j_max, samples >= 1");
  const LeafCocycle b = restrict_to_leaf(a, f, loop.leaf);
  TwistingVerdict v;
  v.epsilon_angle = opts.epsilon_angle;
  v.floor = opts.floor;
  v.samples = opts.samples;
  std::vector<int> hits(opts.j_max, 0);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto usable = [](const OseledetsFrame& fr) { return fr.converged && !fr.degenerate; };
  for (int s = 0; s < opts.samples; ++s) {
    const double t = u(rng);
    const OseledetsFrame f0 = oseledets_frame(b, b.at_fiber(t), opts.frame);
    if (!usable(f0)) {
      ++v.excluded;
      v.detail.push_back({t, 0, 0.0, false});
      continue;
    }
    Mat h = Mat::Identity(a.dim(), a.dim());
    double tj = t;
    for (int j = 1; j <= opts.j_max; ++j) {
      h = loop_holonomy(a, f, cert, loop, tj, opts.holonomy).matrix.matrix() * h;
      tj = loop.h(tj);
      const OseledetsFrame fj = oseledets_frame(b, b.at_fiber(tj), opts.frame);
      if (!usable(fj)) {
        v.detail.push_back({t, j, 0.0, false});
        continue;
      }
      double m = M_PI / 2;
      for (const Subspace* ea : {&f0.unstable, &f0.stable}) {
        const Subspace img = ea->mapped(h);
        for (const Subspace* eb : {&fj.unstable, &fj.stable}) m = std::min(m, subspace_angle(img, *eb));
      }
      v.detail.push_back({t, j, m, true});
      if (m > opts.epsilon_angle) ++hits[j - 1];
    }
  }
  for (int j = 0; j < opts.j_max; ++j) v.fractions.push_back(double(hits[j]) / opts.samples);
  if (v.excluded == opts.samples) {
    v.verdict = Verdict::Inconclusive;
    v.diagnostic = "no sampled fiber point had a convergent non-degenerate Oseledets frame";
    return v;
  }
  for (int j = 0; j < opts.j_max; ++j)
    if (v.fractions[j] >= opts.floor) {
      v.j = j + 1;
      v.verdict = Verdict::Positive;
      return v;
    }
  v.verdict = Verdict::Zero;
  return v;
}

std::vector<std::pair<Subspace, Subspace>> twisting_pairs(const CocycleField& a,
                                                          const SkewProduct& f,
                                                          const FiberBunchingCertificate& cert,
                                                          const HomoclinicLoop& loop, double t,
                                                          const TwistingOptions& opts) {
  const LeafCocycle b = restrict_to_leaf(a, f, loop.leaf);
  const OseledetsFrame f0 = oseledets_frame(b, b.at_fiber(t), opts.frame);
  const OseledetsFrame f1 = oseledets_frame(b, b.at_fiber(loop.h(t)), opts.frame);
  std::vector<std::pair<Subspace, Subspace>> out;
  if (f0.degenerate || f1.degenerate) return out;
  const LoopHolonomy lh = loop_holonomy(a, f, cert, loop, t, opts.holonomy);
  for (const Subspace* ea : {&f0.unstable, &f0.stable})
    for (const Subspace* eb : {&f1.unstable, &f1.stable})
      out.emplace_back(ea->mapped(lh.unstable.matrix.matrix()), eb->mapped(lh.stable.matrix.matrix()));
  return out;
}

// ---------------------------------------------------------------------------

MonotonicityResult epsilon_monotonicity_test(const std::function<Mat(double)>& b,
                                             const MonotonicityOptions& opts) {
  if (!(opts.epsilon > 0.0)) throw InvalidArgument("monotonicity epsilon must be > 0");
  if (opts.grid < 2 || opts.w_samples < 1) throw InvalidArgument("monotonicity grid too small");
  const int n = opts.grid;
  const int w = std::max(1, static_cast<int>(std::floor(opts.window * n + 1e-9)));
  std::vector<Mat> mats(n);
  for (int i = 0; i < n; ++i) {
    mats[i] = b(double(i) / n);
    if (mats[i].rows() != 2 || mats[i].cols() != 2)
      throw DimensionMismatch("monotonicity is defined for SL(2,R) cocycles");
  }
  std::mt19937_64 rng(opts.seed);
  const double phase = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  MonotonicityResult r;
  r.margin = HUGE_VAL;
  std::vector<double> lift(n + w);
  for (int k = 0; k < opts.w_samples; ++k) {
    const double phi = M_PI * (k + phase) / opts.w_samples;
    const Eigen::Vector2d wv(std::cos(phi), std::sin(phi));
    double prev = 0.0;
    for (int i = 0; i < n + w; ++i) {
      const Eigen::Vector2d img = mats[i % n] * wv;
      const double raw = std::atan2(img(1), img(0));
      if (i == 0) {
        lift[0] = raw;
      } else {
        double d = raw - prev;
        d -= 2.0 * M_PI * std::floor((d + M_PI) / (2.0 * M_PI));
        lift[i] = lift[i - 1] + d;
      }
      prev = raw;
    }
    for (int i = 0; i < n; ++i)
      for (int s = 1; s <= w; ++s) {
        const double q = std::abs(lift[i + s] - lift[i]) / (double(s) / n);
        ++r.pairs;
        if (q < r.margin) {
          r.margin = q;
          r.worst_t = double(i) / n;
          r.worst_w_angle = phi;
        }
      }
  }
  r.pass = r.margin > opts.epsilon;
  return r;
}

CocycleField rotate_perturbation(const CocycleField& a, double theta) {
  if (theta == 0.0) return a;
  return a.with_prefix(ConstFactor{block_rotation(a.half_dim(), theta), "rotation"});
}

CocycleField leaf_shear(const CocycleField& a, double eta) {
  if (eta == 0.0) return a;
  const int d = a.half_dim();
  Mat n = Mat::Zero(2 * d, 2 * d);
  n.topRightCorner(d, d) = Mat::Identity(d, d);
  return a.with_prefix(ExpFactor{n, TrigPoly({FourierTerm{eta, {0, 0, 1}, false}})});
}

TransvectionPerturbation transvection_perturbation(const CocycleField& a, const SkewProduct& f,
                                                   const HomoclinicLoop& loop,
                                                   std::vector<Transvection> sigma, double radius,
                                                   int budget) {
  if (!(radius > 0.0)) throw InvalidArgument("bump radius must be positive");
  std::erase_if(sigma, [](const Transvection& t) { return t.strength == 0.0; });
  const auto& g = f.base();
  const auto& z = loop.z;
  TransvectionPerturbation out{a, z.z, radius, HUGE_VAL, 0, 0.0, 0.0};
  for (int n = -budget; n <= budget; ++n) {
    if (n == 0) continue;
    const double d = torus_distance(homoclinic_orbit(g, z, n), z.z);
    if (d < out.min_return_distance) {
      out.min_return_distance = d;
      out.closest_iterate = n;
    }
    if (d <= radius) {
      std::ostringstream os;
      os << "bump support of radius " << radius << " meets the iterate g^" << n
         << "(z) at distance " << d;
      throw SupportCollision(os.str());
    }
  }
  const double tail = std::max(torus_distance(homoclinic_orbit(g, z, budget + 1), z.p),
                               torus_distance(homoclinic_orbit(g, z, -budget - 1), z.p));
  const double dp = torus_distance(z.p, z.z);
  if (dp <= radius + tail) {
    std::ostringstream os;
    os << "bump support of radius " << radius << " reaches the periodic fiber (distance " << dp
       << ")";
    throw SupportCollision(os.str());
  }
  if (sigma.empty()) return out;
  double prod = 1.0, total = 0.0;
  for (const auto& t : sigma) {
    prod *= 1.0 + std::abs(t.strength);
    total += std::abs(t.strength);
  }
  BumpFactor bump{z.z, radius, 0.0, 1.0, std::move(sigma)};
  const double sup_a = a.sup_bound();
  out.sup_change = sup_a * (prod - 1.0);
  const double lip = a.lipschitz_bound() * (prod - 1.0) + sup_a * bump.weight_lipschitz() * total * prod;
  out.holder_change = out.sup_change + lip * std::pow(kSpaceDiameter, 1.0 - a.alpha());
  out.field = a.with_suffix(std::move(bump));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Search {
  const SkewProduct& f;
  const PositivityConfig& cfg;
  const PeriodicLeaf& leaf;
  PositivityReport& rep;

  void log(const std::string& s) { rep.log.push_back(s); }

  void charge(const std::string& name, const std::string& detail, double size) {
    rep.stages.push_back({name, detail, size});
    rep.total_size += size;
    log("stage " + name + ": " + detail + " (size " + format_double(size) + ", total " +
        format_double(rep.total_size) + " of " + format_double(cfg.delta_total) + ")");
    if (rep.total_size > cfg.delta_total)
      throw SearchFailure("perturbation budget exceeded at stage " + name);
  }

  PinchingVerdict pinch(const CocycleField& a, double theta) {
    auto v = weak_pinching_test(a, f, leaf, cfg.pinching);
    log("pinching theta=" + format_double(theta) + " method=" + v.method + " estimate=" +
        format_double(v.estimate) + " +- " + format_double(v.error) + " verdict=" + to_string(v.verdict));
    rep.pinching.push_back(v);
    rep.pinching_thetas.push_back(theta);
    return v;
  }

  // First theta of the grid whose rotated cocycle pinches.
  std::optional<double> sweep(const CocycleField& a) {
    for (double th : cfg.theta_grid) {
      if (th <= 0.0) continue;
      if (pinch(rotate_perturbation(a, th), th).verdict == Verdict::Positive) return th;
    }
    return std::nullopt;
  }

  bool constant_elliptic_return(const CocycleField& a) {
    const LeafCocycle b = restrict_to_leaf(a, f, leaf);
    const std::int64_t den = leaf.irrational ? 1 : leaf.rational_den;
    const Mat m0 = fiber_return(b, 0.0, den);
    for (int i = 1; i < 16; ++i)
      if (op_norm(fiber_return(b, i / 16.0, den) - m0) > 1e-12) return false;
    return log_eigen_moduli(m0).front() <= cfg.pinching.eig_tol;
  }
};

}  // namespace

PositivityReport positivity_search(const CocycleField& a, const SkewProduct& f,
                                   const PositivityConfig& cfg) {
  PositivityReport rep;
  rep.budget = cfg.delta_total;
  const PeriodicLeaf leaf = select_leaf(f, cfg.leaf_period, cfg.leaf_index);
  Search s{f, cfg, leaf, rep};
  s.log("leaf p=(" + format_double(leaf.base.to_vector()(0)) + ", " +
        format_double(leaf.base.to_vector()(1)) + ") period " + std::to_string(leaf.period) +
        (leaf.irrational ? " irrational rotation"
                         : " rational rotation " + std::to_string(leaf.rational_num) + "/" +
                               std::to_string(leaf.rational_den)));

  rep.spectrum_before = lyapunov_spectrum(SkewCocycle(a, f), cfg.spectrum);
  s.log("global spectrum before: lambda+=" + format_double(rep.spectrum_before->top()) + " +- " +
        format_double(rep.spectrum_before->top_stderr()));

  CocycleField cur = a;
  if (s.pinch(a, 0.0).verdict != Verdict::Positive) {
    auto th = s.sweep(a);
    if (!th) {
      const double th_max = cfg.theta_grid.empty()
                                ? 0.0
                                : *std::max_element(cfg.theta_grid.begin(), cfg.theta_grid.end());
      if (s.constant_elliptic_return(rotate_perturbation(a, th_max))) {
        rep.obstruction = true;
        s.log("obstruction: the return map over the leaf is constant and elliptic, rotation blocks keep it so");
      }
      if (!(cfg.leaf_shear > 0.0))
        throw SearchFailure("rotation sweep found no pinching leaf and no leaf shear is configured");
      cur = leaf_shear(a, cfg.leaf_shear);
      s.charge("leaf_shear", "fiber-dependent shear exp(eta cos(2 pi t) N), eta=" + format_double(cfg.leaf_shear),
               cfg.leaf_shear);
      if (s.pinch(cur, 0.0).verdict != Verdict::Positive) th = s.sweep(cur);
      else th = 0.0;
      if (!th) throw SearchFailure("rotation sweep after the leaf shear found no pinching leaf");
    }
    if (*th > 0.0) {
      cur = rotate_perturbation(cur, *th);
      s.charge("rotation", "R_theta prefix, theta=" + format_double(*th), 2.0 * std::sin(*th / 2.0));
    }
  }

  FiberBunchingCertificate cert = certify_fiber_bunching(cur, f, cfg.bunching_horizon, cfg.bunching_grid);
  s.log("fiber bunching theta_rate=" + format_double(cert.theta_rate) + " C3=" + format_double(cert.c3) +
        (cert.pass ? " pass" : " fail"));
  if (!cert.pass) throw CertificateRequired("pinching cocycle is not fiber bunched; loop holonomies unavailable");
  const HomoclinicLoop loop = make_loop(f, leaf, cfg.homoclinic_index, cfg.homoclinic_budget);
  s.log("homoclinic z=(" + format_double(loop.z.z(0)) + ", " + format_double(loop.z.z(1)) +
        ") loop shift " + format_double(loop.shift));
  rep.twisting_before = weak_twisting_test(cur, f, cert, loop, cfg.twisting);
  s.log(std::string("twisting before: ") + to_string(rep.twisting_before->verdict) + " j=" +
        std::to_string(rep.twisting_before->j));

  if (rep.twisting_before->verdict != Verdict::Positive) {
    std::vector<std::pair<Subspace, Subspace>> pairs;
    int used = 0;
    for (const auto& d : rep.twisting_before->detail) {
      if (!d.usable || d.j != 1 || used >= 4) continue;
      auto ps = twisting_pairs(cur, f, cert, loop, d.t, cfg.twisting);
      pairs.insert(pairs.end(), ps.begin(), ps.end());
      ++used;
    }
    const double delta = std::min(cfg.separation_delta, cfg.delta_total - rep.total_size);
    if (!(delta > 0.0)) throw SearchFailure("no budget left for the transvection stage");
    std::vector<Transvection> factors;
    if (!pairs.empty()) {
      const auto sep = separate_many(pairs, delta, cfg.seed);
      factors = sep.factors;
      s.log("separate_many on " + std::to_string(pairs.size()) + " subspace pairs: " +
            std::to_string(factors.size()) + " transvections");
    }
    if (factors.empty()) {
      // Pairs already transverse (or no usable frame): angles are small but
      // nonzero, so a single generic transvection is used instead.
      std::mt19937_64 rng(cfg.seed);
      factors.push_back({random_unit_vector(a.dim(), rng), 0.999 * delta});
      s.log("no intersecting pair; using one generic transvection");
    }
    const SymplecticForm form(a.half_dim());
    const double size = transvection_product(form, factors).distance_to_identity();
    auto pert = transvection_perturbation(cur, f, loop, factors, cfg.bump_radius, cfg.homoclinic_budget);
    cur = pert.field;
    s.charge("transvection", "bump of radius " + format_double(cfg.bump_radius) + " at the homoclinic fiber, " +
                                 std::to_string(factors.size()) + " factors, closest return g^" +
                                 std::to_string(pert.closest_iterate),
             size);
    cert = certify_fiber_bunching(cur, f, cfg.bunching_horizon, cfg.bunching_grid);
    if (cert.pass) {
      rep.twisting_after = weak_twisting_test(cur, f, cert, loop, cfg.twisting);
      s.log(std::string("twisting after: ") + to_string(rep.twisting_after->verdict) + " j=" +
            std::to_string(rep.twisting_after->j));
    } else {
      s.log("perturbed cocycle failed the bunching grid check; twisting not re-tested");
    }
  }
  rep.certificate = cert;
  rep.perturbed = !rep.stages.empty();
  if (!rep.perturbed) s.log("no perturbation applied: the cocycle already pinches and twists");

  rep.spectrum_after = lyapunov_spectrum(SkewCocycle(cur, f), cfg.spectrum);
  const auto& sa = *rep.spectrum_after;
  rep.success = sa.top() > 3.0 * sa.top_stderr() && sa.top() > 0.0;
  s.log("global spectrum after: lambda+=" + format_double(sa.top()) + " +- " + format_double(sa.top_stderr()) +
        (rep.success ? " positive" : " not separated from zero"));
  rep.final_field = cur;
  return rep;
}

}  // namespace cocycle_lab
