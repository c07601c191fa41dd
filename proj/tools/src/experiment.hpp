#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"

namespace rsplit::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// One CSV table. Column orders are fixed per experiment:
///   simulate           trajectory.csv   cycle, leading_time, <coordinate names>
///   weak-converge      weak_errors.csv  h, cycles, observable, estimate, reference, error, standard_error, included
///                      weak_fit.csv     observable, slope, points_used, monotone
///   pathwise-converge  pathwise.csv     m, cycles, error
///   ergodic            moments.csv      coordinate, order, estimate, standard_error, reference,
///                                       reference_standard_error, z, agrees
///   ranks              ranks.csv        point, matrix, rows, cols, rank, expected_rank, gap, determinant,
///                                       determinant_formula, singular_values
///   bracket            brackets.csv     point, triad, variant, residual
///   lyapunov           lyapunov_drift.csv  radius, mean_norm, standard_error, bound, holds
///   control-demo       control.csv      point, triad, variant, operation, time, residual, ok, note
/// Empty cells mean "not applicable"; singular values are joined with ';'.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ExperimentResult {
  bool pass = false;
  nlohmann::json summary = nlohmann::json::object();
  std::map<std::string, Table> tables;  // file name -> table
};

/// Runs the experiment in memory.
ExperimentResult execute(const ExperimentConfig& cfg);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::vector<std::string> overrides;
};

/// Executes and writes the tables plus manifest.json into out_dir. Returns
/// the exit status: 0 pass, 2 failed acceptance check, 1 error.
int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

/// Manifest for a run that never got a valid config.
void write_error_manifest(const std::filesystem::path& out_dir, const std::vector<std::string>& errors,
                          const std::vector<std::string>& overrides);

std::string format_double(double v);
std::string csv_field(const std::string& s);
std::string to_csv(const Table& t);

/// Coordinate names used as the trajectory header: x0..x{n-1} for
/// Lorenz-96, a(j1,j2) and b(j1,j2) for Euler.
std::vector<std::string> coordinate_names(const ModelSpec& spec);

/// Starting state for substream `stream` of the root seed.
StateVector initial_state(const ExperimentConfig& cfg, std::uint64_t stream);

const char* toolkit_version();

}  // namespace rsplit::cli
