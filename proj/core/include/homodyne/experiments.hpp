#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "homodyne/emulator.hpp"
#include "homodyne/solvers.hpp"

namespace homodyne {

inline constexpr const char* kLibraryVersion = "1.0.0";

/// Bad or inconsistent configuration (exit code 3 at the CLI).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem trouble reading inputs or writing outputs (exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  Equalize,
  Charge,
  Efie,
  GliderSynthetic,
  MnistReal,
  MnistComplex,
  BitsliceDemo,
  Flower,
};

enum class BackendKind { Exact, Analog, Split, Bitsliced };

std::string to_string(ExperimentKind kind);
std::string to_string(BackendKind kind);
ExperimentKind experiment_from_string(const std::string& name);
BackendKind backend_from_string(const std::string& name);

struct OutputConfig {
  std::string directory = ".";
  /// Report file name; empty means "<prefix><experiment>_report.json".
  std::string report;
  /// Prefix prepended to every emitted file name.
  std::string prefix;
};

/// Union of per-experiment knobs; each experiment reads (and echoes) only its
/// own subset.
struct ProblemConfig {
  // charge
  std::size_t segments = 100;
  double length = 1.0;
  double wire_radius = 1e-3;
  double potential = 1.0;
  // efie
  std::size_t match_points = 101;
  double half_length = 0.25;
  double efie_radius = 0.25 / 200.0;
  std::size_t band_halfwidth = 10;
  // glider-synthetic
  std::size_t size = 512;
  double dynamic_range_db = 80.0;
  std::size_t band_width = 8;
  double outlier_fraction = 3e-5;
  // equalize
  std::size_t payload_length = 4096;
  std::size_t n_datasets = 100;
  std::size_t block = 1024;
  double bandwidth_limit = 0.0;  // 0 disables the band limiter
  // flower
  std::size_t samples = 1024;
  std::size_t petals = 5;
  // mnist
  std::string data_dir;  // empty -> $HOMODYNE_MNIST_DIR
  std::string weights;   // empty -> $HOMODYNE_WEIGHTS_DIR/mnist_<kind>.howt
  std::size_t subset = 1000;
  // bitslice-demo
  std::size_t demo_size = 64;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Flower;
  std::uint64_t seed = 0;
  BackendKind backend = BackendKind::Analog;
  /// Optional named sigma preset; when set it overrides emulator.sigma and is
  /// resolved (and echoed) at validation time.
  std::string preset;
  EmulatorConfig emulator;
  RefineConfig solver;
  /// Inner backend used when backend == Split.
  BackendKind split_inner = BackendKind::Analog;
  ProblemConfig problem;
  OutputConfig output;

  /// Resolves the preset, propagates the global seed into the emulator, and
  /// throws ConfigError on any inconsistency.
  void finalize();
};

/// Paper-figure presets: fills backend/solver/problem defaults for the named
/// experiment (charge -> PCG at 6 bits, efie -> band split + GMRES, ...).
ExperimentConfig default_config(ExperimentKind kind);

/// Parses (and fully validates) a JSON config.  Unknown keys anywhere are
/// rejected with their dotted path.  Missing keys take the experiment's
/// defaults.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

/// Echo with every default materialized; parse_config(config_json(c)) is the
/// identity.
nlohmann::json config_json(const ExperimentConfig& cfg);

struct RunReport {
  ExperimentConfig config;
  /// Deterministic numeric payload: replaying the echoed config reproduces
  /// this object bit-for-bit.
  nlohmann::json results;
  double wall_seconds = 0.0;
  std::string version = kLibraryVersion;
};

/// Executes the configured experiment (pure computation; no files touched).
RunReport run(const ExperimentConfig& cfg);

/// Full report as JSON (config echo + results + wall time + version).
nlohmann::json report_json(const RunReport& report);

/// Writes the per-figure CSV files (residual traces, spectra, histograms,
/// scatter samples, confusion matrices) into report.config.output.directory.
/// Returns the paths written.
std::vector<std::string> emit_plot_data(const RunReport& report);

/// Writes the JSON report to its configured path and returns that path.
std::string write_report(const RunReport& report);

/// Scalar summary of a report's results (dotted keys, arrays skipped);
/// booleans appear as 0/1.  This is what seed sweeps tabulate.
std::map<std::string, double> summarize(const RunReport& report);

struct SweepResult {
  std::vector<std::uint64_t> seeds;
  /// One row per seed, same key set in every row.
  std::vector<std::map<std::string, double>> rows;
  nlohmann::json merged;  // per-seed table + mean/median aggregates
};

/// Runs `base` under n derived seeds (derive_seed(base.seed, k)) and merges
/// the scalar summaries.
SweepResult sweep(const ExperimentConfig& base, std::size_t n_seeds);

/// RFC-4180 CSV cell: quotes only when the text needs it.
std::string csv_escape(const std::string& field);
/// Shortest exact decimal form ("%.17g") used in every emitted CSV.
std::string csv_double(double v);

}  // namespace homodyne
