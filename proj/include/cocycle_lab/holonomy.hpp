#pragma once

// Fiber bunching, strong stable/unstable holonomies and the homoclinic loop
// holonomy over a fixed center leaf.

#include <vector>

#include "cocycle_lab/cocycle.hpp"

namespace cocycle_lab {

struct FiberBunchingCertificate {
  double alpha = 1.0;
  double c3 = 0.0;
  double theta_rate = 0.0;
  /// exp(slope) of the fit restricted to [N/2, N].
  double tail_theta = 0.0;
  bool pass = false;
  int grid_resolution = 0;
  int horizon = 0;
  /// sup over the grid of log(||A^n|| ||A^-n||) + n alpha log nu, n = 0..N.
  std::vector<double> log_sup;
  /// Hoelder constant of the holonomies implied by the fit.
  double holonomy_constant = 0.0;
};

FiberBunchingCertificate certify_fiber_bunching(const CocycleField& a, const SkewProduct& f,
                                                int horizon, int grid);

/// A point together with a second point on its strong stable (unstable)
/// manifold, given by the base displacement coef * e_{s|u}. The second
/// point's fiber coordinate follows from the center holonomy.
struct LeafPair {
  Point from;
  double coef = 0.0;
  LeafKind kind = LeafKind::Stable;
};

Point leaf_pair_target(const SkewProduct& f, const LeafPair& pair);

struct HolonomyOptions {
  double term_tol = 1e-10;
  int n_max = 400;
  double residual_max = 1e-8;
  int n_min = 4;
};

struct HolonomyOperator {
  Point p, q;
  LeafKind kind = LeafKind::Stable;
  SymplecticMatrix matrix = SymplecticMatrix::identity(2);
  int n_used = 0;
  /// ||H_n - H_{n/2}||.
  double residual = 0.0;
  /// ||H - I|| <= holder_constant * dist(p, q)^alpha is expected.
  double holder_constant = 0.0;
  double distance = 0.0;
  std::vector<double> residual_trace;  // norms of the series terms
};

HolonomyOperator strong_holonomy(const CocycleField& a, const SkewProduct& f,
                                 const FiberBunchingCertificate& cert, const LeafPair& pair,
                                 const HolonomyOptions& opts = {});
/// q must lie on the local strong stable (unstable) set of p.
HolonomyOperator strong_holonomy(const CocycleField& a, const SkewProduct& f,
                                 const FiberBunchingCertificate& cert, const Point& p,
                                 const Point& q, LeafKind kind, const HolonomyOptions& opts = {});

/// Loop through the homoclinic point z of a fixed point p: t -> h(t) = t + shift.
struct HomoclinicLoop {
  PeriodicLeaf leaf;
  HomoclinicPoint z;
  double shift_u = 0.0;  // fiber over z reached from (p, t) along W^u: t + shift_u
  double shift_s = 0.0;  // (z, s) to p along W^s: s + shift_s
  double shift = 0.0;

  double h(double t) const { return wrap_unit(t + shift); }
  double h_pow(double t, int j) const { return wrap_unit(t + j * shift); }
};

HomoclinicLoop make_loop(const SkewProduct& f, const PeriodicLeaf& leaf, int homoclinic_index,
                         int budget = 20);

struct LoopHolonomy {
  SymplecticMatrix matrix = SymplecticMatrix::identity(2);
  HolonomyOperator unstable;
  HolonomyOperator stable;  // anchored at (p, h(t)), inverted in the loop
};

/// H_t = H^s_{(z, t_z), (p, h(t))} H^u_{(p, t), (z, t_z)}.
LoopHolonomy loop_holonomy(const CocycleField& a, const SkewProduct& f,
                           const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                           double t, const HolonomyOptions& opts = {});

struct LoopIterate {
  double t = 0.0;  // h^j(t)
  SymplecticMatrix matrix = SymplecticMatrix::identity(2);
};

/// H^{(j)}_t = H_{h^{j-1} t} ... H_{h t} H_t.
LoopIterate iterate_loop(const CocycleField& a, const SkewProduct& f,
                         const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                         double t, int j, const HolonomyOptions& opts = {});

/// max ||H_t - H_t'|| over grid neighbours at spacing 1/grid.
double loop_continuity_modulus(const CocycleField& a, const SkewProduct& f,
                               const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                               int grid, const HolonomyOptions& opts = {});

}  // namespace cocycle_lab
