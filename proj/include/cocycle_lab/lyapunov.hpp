#pragma once

// Lyapunov spectra by QR re-orthonormalization along sampled orbits, and
// finite-time Oseledets frames.

#include <cstdint>
#include <string>
#include <vector>

#include "cocycle_lab/cocycle.hpp"

namespace cocycle_lab {

struct LyapunovOptions {
  long n = 100000;
  int orbits = 8;
  std::uint64_t seed = 0;
  /// Discarded transient; -1 means n / 100.
  long warmup = -1;
  /// QR every k steps; 0 picks 1 for dim <= 4 and 5 above.
  int reortho_interval = 0;
  /// Worker threads; results do not depend on it.
  int jobs = 1;
};

struct LyapunovReport {
  std::vector<double> exponents;  // descending
  std::vector<double> stderr_;    // per exponent, across orbits
  long n = 0;
  int orbits = 0;
  std::uint64_t seed = 0;
  int reortho_interval = 1;
  double symmetry_defect = 0.0;
  std::vector<std::vector<double>> per_orbit;
  std::string measure;

  double top() const { return exponents.front(); }
  double top_stderr() const { return stderr_.front(); }
  double max_stderr() const;
};

LyapunovReport lyapunov_spectrum(const LinearCocycle& c, const LyapunovOptions& opts);

/// Exponents of one orbit from x with a given initial orthonormal frame.
std::vector<double> orbit_exponents(const LinearCocycle& c, Point x, const Mat& frame, long n,
                                    long warmup, int reortho_interval);

struct OseledetsOptions {
  long n = 200;
  std::uint64_t seed = 0;
  /// Frames whose convergence residual exceeds this are flagged.
  double residual_threshold = 1e-6;
  /// Gap floor: below max(gap_floor, gap_scale / n) the frame is degenerate.
  double gap_floor = 1e-3;
  double gap_scale = 2.0;
  bool with_equivariance = true;
};

struct OseledetsFrame {
  Point x;
  Subspace unstable = Subspace::zero(2);
  Subspace stable = Subspace::zero(2);
  /// Smallest positive finite-time exponent (half the gap).
  double finite_time_gap = 0.0;
  /// Zero top exponent: E^u = E^s = whole space.
  bool degenerate = false;
  /// Angle between the n and n/2 estimates.
  double convergence_residual = 0.0;
  /// Angle between A(x) E_x and E_{f(x)}.
  double equivariance_residual = 0.0;
  bool converged = false;
};

OseledetsFrame oseledets_frame(const LinearCocycle& c, const Point& x,
                               const OseledetsOptions& opts = {});

}  // namespace cocycle_lab
