#pragma once

// Scenario files (YAML) and their validated in-memory form.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "cocycle_lab/diagnostics.hpp"

namespace cocycle_lab {

struct SpectrumSettings {
  long n = 100000;
  int orbits = 8;
  long warmup = -1;
  int reortho_interval = 0;
};

struct BunchingSettings {
  int horizon = 30;
  int grid = 6;
};

struct MonotoneSettings {
  double epsilon = 1.0;
  int grid = 2048;
  int w_samples = 16;
  double window = 1.0 / 16;
};

struct SweepSettings {
  std::string parameter = "theta";  // theta | coefficient
  std::vector<double> values;
  int factor = 0;                   // for coefficient sweeps
  std::string measure = "leaf";     // leaf | global
  double leaf_shear = 0.0;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  IntMatrix2 base_matrix;
  std::vector<FourierTerm> theta;
  int half_dim = 1;
  double alpha = 1.0;
  std::vector<CocycleFactor> factors;
  int leaf_period = 1;
  int leaf_index = 0;
  std::vector<int> homoclinic_indices{0};
  int homoclinic_budget = 20;
  std::string fiber_measure = "lebesgue";
  SpectrumSettings spectrum;
  BunchingSettings bunching;
  PinchingOptions pinching;
  TwistingOptions twisting;
  std::vector<Transvection> twisting_sigma;  // optional perturbation before the test
  MonotoneSettings monotone;
  PositivityConfig perturb;
  SweepSettings sweep;
  /// Parsed document after overrides, echoed into reports.
  YAML::Node document;

  SkewProduct skew_product() const;
  CocycleField cocycle() const;
};

/// Applies `section.key=value` to the document; value is parsed as YAML.
void apply_override(YAML::Node& doc, const std::string& assignment);

/// Validates and converts; throws InvalidArgument listing every offending
/// field.
Scenario parse_scenario(const YAML::Node& doc);
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {},
                       std::optional<std::uint64_t> seed = std::nullopt);

/// Independent seeds for the stages of one run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage);

}  // namespace cocycle_lab
