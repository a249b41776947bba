#pragma once

// Experiment driver behind the command line tool.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocycle_lab/scenario.hpp"

namespace cocycle_lab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInconclusive = 2;

inline constexpr const char* kReportSchemaVersion = "1.0.0";

struct RunOptions {
  std::string subcommand;
  std::string scenario_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand, writes report.json, pipeline.log and (for spectrum
/// and sweep) a CSV file into out_dir. Returns the process exit code.
int run_lab(const RunOptions& opts);

nlohmann::json yaml_to_json(const YAML::Node& n);
nlohmann::json to_json(const LyapunovReport& r);
nlohmann::json to_json(const FiberBunchingCertificate& c);
nlohmann::json to_json(const PinchingVerdict& v);
nlohmann::json to_json(const TwistingVerdict& v);
nlohmann::json to_json(const MonotonicityResult& m);
nlohmann::json to_json(const PositivityReport& r);
nlohmann::json matrix_json(const Mat& m);

/// "%.12g"; the CSV bodies depend only on this formatting.
std::string format_number(double v);

}  // namespace cocycle_lab
