// harness.hpp
//
// Experiment orchestration: JSON configs, seeded multi-trial runs of the
// passive, baseline and proposed learners, AUC sweeps and CSV output.
#pragma once

#include "cfal/active_learner.hpp"
#include "cfal/io.hpp"
#include "cfal/linear_mode.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfal {

/// Invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { exact, linear };

struct ExperimentConfig {
  Mode mode = Mode::exact;
  std::uint64_t seed = 1;
  Index trials = 1;
  std::string output;  // empty: CSV to stdout, no sidecar
  std::vector<Algorithm> algorithms{Algorithm::vc_active};
  Ablations ablations;

  // exact mode
  std::string fixture;               // named fixture, or
  std::optional<ParsedWorld> world;  // an explicit world
  Index logged = 0;
  std::vector<Index> schedule;
  double delta = 0.1;
  std::vector<double> gamma1{4.0};

  // linear mode
  LinearWorldConfig linear;
  std::vector<std::string> policies{"certainty"};
  double q_min = 0.05;
  std::vector<double> capacity{1.0};
  std::vector<double> eta{1.0};
  Index curve_every = 50;
};

/// Parses a JSON config. Relative `world_file` paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

struct CurveRow {
  std::string algorithm;
  std::string params;
  Index trial = 0;
  Index labels_used = 0;
  double test_error = 0.0;
};

/// One trial's curve and the label horizon it is integrated over.
struct TrialCurve {
  std::vector<CurvePoint> points;
  Index horizon = 0;
};

/// (1/2N) sum_i sum_{l < H_i} (e_i(l+1) + e_i(l)), where e_i is the
/// step-interpolated error of trial i, held at its last value past the end.
double auc(const std::vector<TrialCurve>& trials);

struct GridResult {
  std::string policy;  // empty in exact mode
  Algorithm algorithm = Algorithm::vc_active;
  std::string params;
  double auc = 0.0;
};

struct ExperimentResult {
  std::vector<CurveRow> rows;    // sorted by (algorithm, params, trial)
  std::vector<GridResult> grid;  // in grid order
  std::vector<GridResult> best;  // argmin AUC per (policy, algorithm)
};

/// Evaluates every (policy, algorithm, grid point, trial) combination.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 0);

std::string curve_csv(const std::vector<CurveRow>& rows);
std::string grid_csv(const std::vector<GridResult>& grid);
/// Metadata sidecar: seed, RNG id and the fixed design constants.
std::string metadata_json(const ExperimentConfig& config, const ExperimentResult* result);

}  // namespace cfal
