#pragma once
// Experiment configuration, the batch runner and its on-disk artifacts.
//
// A run directory holds config.ini (the echo), report.json and plot-ready
// CSVs. Numeric CSV columns are written with 17 significant digits and carry
// no timestamps, so repeated runs with one seed are byte-identical.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eqlab/geometry.hpp"
#include "eqlab/weight.hpp"

namespace eqlab {

enum class ExperimentKind { Envelope, KernelConvergence, RateFit, Moments, ZeroEquidistribution, ExpectationCurrent };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Envelope;
  // [weight]
  /// Builtin descriptor ("cap{1}"), "radial-csv:PATH" or "node-csv:PATH".
  std::string weight = "fs";
  // [grid]
  GridShape grid{kDefaultResolution, kDefaultResolution};
  // [measure]
  std::string measure = "GaussianComplex";
  std::vector<int> ks;  // coefficient dimensions for Moments
  double nu = 2.0;
  // [run]
  std::vector<int> degrees;
  int trials = 50;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "runs";
  double tol = 1e-8;
  int oracle_slopes = 4096;
  int degree_cap = 200;
  bool use_cache = true;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// INI text with sections [run], [weight], [grid], [measure].
std::string to_ini(const ExperimentConfig& cfg);
ExperimentConfig parse_ini(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Throws Configuration on any inconsistency; run() calls this before computing anything.
void validate(const ExperimentConfig& cfg);
/// SHA-256 of the canonical INI text.
std::string config_hash(const ExperimentConfig& cfg);

/// Weight named by the config (builtin, radial CSV or node CSV).
WeightField load_weight(const ExperimentConfig& cfg);

/// Content key of an orthonormal basis: weight samples on the grid, degree and grid shape.
std::string cache_key(const WeightField& weight, int p, const QuadratureGrid& grid);

struct Verdict {
  std::string criterion;  // e.g. "C3 L1 convergence"
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct RunReport {
  ExperimentConfig config;
  std::string run_dir;
  std::string weight_hash;
  std::string tool_version;
  double wall_clock_seconds = 0.0;
  bool complete = false;
  std::string failed_stage;
  std::string json_metrics;  // per-degree / per-k metrics, serialized JSON array
  std::vector<Verdict> verdicts;

  bool all_pass() const;
};

inline constexpr const char* kToolVersion = "eqlab 1.0.0";

/// Execute one experiment; writes config.ini, CSVs and report.json into a fresh run directory
/// under cfg.out named <UTC timestamp>-<config hash prefix>.
RunReport run(const ExperimentConfig& cfg);

/// Re-read report.json from a run directory.
RunReport read_report(const std::string& run_dir);

/// Exit code policy: 0 pass, 1 criterion failure, 2 configuration error, 3 numeric error.
int exit_code_for(const RunReport& report);
int exit_code_for_error(const std::exception& e);

}  // namespace eqlab
