#pragma once

// Configuration, ensemble execution and file output for the command-line
// front end.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trajzoom/kernels.hpp"
#include "trajzoom/model.hpp"

namespace trajzoom {

enum class Mode { kDiscrete, kSde, kLimit, kStatsExcursions, kStatsLevy, kStatsSpikes, kStatsEntropy };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct RunConfig {
  Mode mode = Mode::kSde;
  ModelParams params;
  std::size_t n_traj = 1;
  /// Real time for discrete, sde and stats-spikes; effective time for limit,
  /// stats-entropy and the per-trajectory window of stats-excursions; the
  /// completion cap for stats-levy.
  double horizon = 1.0;
  std::string output_dir = "out";
  std::uint64_t master_seed = 0;
  double effective_time_normalization = 2.0;
  std::optional<double> q0;
  double floor = 0.02;
  double apex_min = 0.45;
  double apex_max = 0.55;
  std::vector<double> sigmas{0.5, 1.0, 2.0};
  std::vector<double> s_points{0.5, 1.0};
  kernels::ReflectionScheme reflection = kernels::ReflectionScheme::kClamp;
  kernels::Boundaries boundaries = kernels::Boundaries::kBoth;
  double spike_height = 0.5;
  double sample_spacing = 2.5e-3;
};

/// Parses the key=value format: one pair per line, `#` starts a comment,
/// blank lines are ignored. Throws kParseError (malformed line, duplicate
/// key, bad number, missing mode), kUnknownKey, or the validation error of
/// the offending field, each carrying the 1-based line number.
RunConfig parse_config(std::string_view text);

/// Every key with its resolved value, in a fixed order; parse_config of the
/// joined lines gives back the same configuration.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

/// Replaces master_seed with TRAJZOOM_SEED when that variable is set.
/// Returns true if it did.
bool apply_seed_override(RunConfig& config);

struct RunOptions {
  unsigned threads = 1;
  bool dump_paths = false;
  std::string seed_source = "config";
};

enum ExitCode : int {
  kExitSuccess = 0,
  kExitConfig = 2,
  kExitEngine = 3,
  kExitConsistency = 4,
};

struct RunResult {
  int exit_code = kExitSuccess;
  std::string message;
  std::vector<std::filesystem::path> files;
};

/// Runs the configured mode and writes its CSV files and manifest.txt into
/// output_dir. Engine errors give kExitEngine and a failed internal check
/// (trajectory invariants, Skorokhod identity, CSV round trip) gives
/// kExitConsistency. IO failures surface as kExitEngine with an IO code in the
/// message.
RunResult run(const RunConfig& config, const RunOptions& options = {});

/// Trajectory paths are written when n_traj is at most this, or on request.
inline constexpr std::size_t kPathDumpLimit = 16;

/// Reads every traj_*.csv in `in_dir` and writes the three aligned panels
/// (Q_vs_s, Q_vs_t, t_vs_s) as rows trajectory,panel,x,y. Throws
/// kMissingColumn when a file lacks Q, s or t, kIo on read/write failure.
void emit_plotdata(const std::filesystem::path& in_dir, const std::filesystem::path& out_file);

/// Minimal CSV table with a one-line header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& file);

/// %.17g, enough digits to round-trip every double.
std::string format_double(double v);

}  // namespace trajzoom
