#pragma once

// Weak pinching, weak twisting, epsilon-monotonicity, the two perturbation
// operators and the positivity pipeline that chains them.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cocycle_lab/holonomy.hpp"
#include "cocycle_lab/lyapunov.hpp"

namespace cocycle_lab {

enum class Verdict { Positive, Zero, Inconclusive };
const char* to_string(Verdict v);

struct PinchingOptions {
  long n = 20000;
  int orbits = 8;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Fiber grid for the eigenvalue route (rational rotation).
  int t_grid = 512;
  /// Estimates at or below this count as zero.
  double zero_floor = 1e-3;
  /// log spectral radius above this counts as hyperbolic.
  double eig_tol = 1e-9;
};

struct PinchingVerdict {
  Eigen::Vector2d leaf_point{0.0, 0.0};
  int period = 1;
  std::string method;  // "lyapunov" or "eigenvalue"
  double estimate = 0.0;
  double error = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  /// Full spectrum on the leaf, largest first; `samples` orbits or t values.
  std::vector<double> exponents;
  long samples = 0;
  /// Fraction of samples with lambda_i > lambda_{i+1} (i = 1..2d-1).
  std::vector<double> gap_fractions;
  std::string measure;
  std::optional<LyapunovReport> spectrum;
};

PinchingVerdict weak_pinching_test(const CocycleField& a, const SkewProduct& f,
                                   const PeriodicLeaf& leaf, const PinchingOptions& opts = {});

struct TwistingOptions {
  int j_max = 3;
  int samples = 64;
  double epsilon_angle = 1e-2;
  /// Minimal sample fraction standing in for positive measure.
  double floor = 0.05;
  std::uint64_t seed = 0;
  OseledetsOptions frame{200, 0, 1e-6, 1e-3, 2.0, false};
  HolonomyOptions holonomy{};
};

struct TwistingSample {
  double t = 0.0;
  int j = 0;
  double min_angle = 0.0;
  bool usable = false;
};

struct TwistingVerdict {
  int j = 0;  // first j that passes, 0 if none
  std::vector<double> fractions;  // per j = 1..j_max
  double epsilon_angle = 0.0;
  double floor = 0.0;
  int samples = 0;
  int excluded = 0;  // non-convergent or degenerate frames at t
  Verdict verdict = Verdict::Inconclusive;
  std::string diagnostic;
  std::vector<TwistingSample> detail;
};

TwistingVerdict weak_twisting_test(const CocycleField& a, const SkewProduct& f,
                                   const FiberBunchingCertificate& cert, const HomoclinicLoop& loop,
                                   const TwistingOptions& opts = {});

/// Subspace pairs (H^u E^a_t, (H^s)^{-1} E^b_{h t}) whose separation makes
/// the perturbed loop move {E^u, E^s} off themselves at t.
std::vector<std::pair<Subspace, Subspace>> twisting_pairs(const CocycleField& a,
                                                          const SkewProduct& f,
                                                          const FiberBunchingCertificate& cert,
                                                          const HomoclinicLoop& loop, double t,
                                                          const TwistingOptions& opts = {});

struct MonotonicityOptions {
  double epsilon = 1.0;
  int grid = 2048;
  int w_samples = 16;
  /// Pairs (t, t') with 0 < t' - t <= window are compared.
  double window = 1.0 / 16;
  std::uint64_t seed = 0;
};

struct MonotonicityResult {
  double margin = 0.0;
  bool pass = false;
  double worst_t = 0.0;
  double worst_w_angle = 0.0;
  long pairs = 0;
};

MonotonicityResult epsilon_monotonicity_test(const std::function<Mat(double)>& b,
                                             const MonotonicityOptions& opts);

/// x -> R_theta A(x), R_theta the block rotation.
CocycleField rotate_perturbation(const CocycleField& a, double theta);

/// x -> exp(eta cos(2 pi t) N) A(x) with N = [[0, I], [0, 0]]: a fiber-dependent
/// shear used when rotations alone meet a constant elliptic return map.
CocycleField leaf_shear(const CocycleField& a, double eta);

struct TransvectionPerturbation {
  CocycleField field;
  Eigen::Vector2d center;
  double radius = 0.0;
  /// min over checked iterates of dist(g^n z, z).
  double min_return_distance = 0.0;
  int closest_iterate = 0;
  double sup_change = 0.0;     // bound on ||A_hat - A||_inf
  double holder_change = 0.0;  // bound on ||A_hat - A||_alpha
};

/// A_hat(x) = A(x) prod_i (I + phi(x)(sigma_i - I)) with phi a bump around the
/// fiber over z. Throws SupportCollision when the support meets g^n z,
/// 0 < |n| <= budget, or the fiber over p.
TransvectionPerturbation transvection_perturbation(const CocycleField& a, const SkewProduct& f,
                                                   const HomoclinicLoop& loop,
                                                   std::vector<Transvection> sigma, double radius,
                                                   int budget = 20);

struct PositivityConfig {
  int leaf_period = 1;
  int leaf_index = 0;
  int homoclinic_index = 0;
  int homoclinic_budget = 20;
  std::vector<double> theta_grid;
  double leaf_shear = 0.0;
  double delta_total = 2.0;
  double separation_delta = 0.1;
  double bump_radius = 0.05;
  int bunching_horizon = 30;
  int bunching_grid = 6;
  PinchingOptions pinching{};
  TwistingOptions twisting{};
  LyapunovOptions spectrum{};
  std::uint64_t seed = 0;
};

struct PerturbationStage {
  std::string name;
  std::string detail;
  double size = 0.0;
};

struct PositivityReport {
  std::vector<PerturbationStage> stages;
  std::vector<PinchingVerdict> pinching;
  std::vector<double> pinching_thetas;
  std::optional<FiberBunchingCertificate> certificate;
  std::optional<TwistingVerdict> twisting_before;
  std::optional<TwistingVerdict> twisting_after;
  std::optional<LyapunovReport> spectrum_before;
  std::optional<LyapunovReport> spectrum_after;
  bool perturbed = false;
  bool obstruction = false;
  double total_size = 0.0;
  double budget = 0.0;
  bool success = false;
  std::vector<std::string> log;
  std::optional<CocycleField> final_field;
};

PositivityReport positivity_search(const CocycleField& a, const SkewProduct& f,
                                   const PositivityConfig& cfg);

}  // namespace cocycle_lab
