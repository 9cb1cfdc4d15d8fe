#pragma once

#include "extasym/asymptotics.hpp"
#include "extasym/config.hpp"
#include "extasym/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace extasym {

/// Environment variable prefixed to relative output directories.
inline constexpr const char* kOutputRootEnv = "EXTASYM_OUTPUT_ROOT";

/// cfg.output_dir, below $EXTASYM_OUTPUT_ROOT when that is set and the
/// directory is relative.
std::filesystem::path output_directory(const ExperimentConfig& cfg);

std::shared_ptr<const AnnulusGrid> make_grid(const GridSpec& g);

/// Runs the configured method on the configured grid.
Solution run_solve(const ExperimentConfig& cfg);

struct RecoveryRow {
  std::string coefficient;
  double planted = 0.0;
  double fitted = 0.0;
  double abs_error = 0.0;
  /// Relative error, or the absolute error when the planted value is 0.
  double error = 0.0;
  bool relative = true;
  double tolerance = 0.0;
  /// Part of the overall verdict (c, d, e); A and b are reported only.
  bool gated = false;
  bool pass = false;
};

struct RecoveryResult {
  Solution solution;
  ExpansionFit fit;
  std::vector<RecoveryRow> rows;
  bool pass = false;
};

/// Absolute tolerance used for coefficients planted as zero.
inline constexpr double kZeroCoefficientTolerance = 1e-8;

/// Solve with planted boundary data, fit the expansion and compare. Needs a
/// linear operator, where the planted expansion is an exact solution.
RecoveryResult recover_planted(const ExperimentConfig& cfg);

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  std::string quantity;
  double value = 0.0;
  std::optional<double> order;
  bool exact = false;
  std::string status = "ok";
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  bool complete = true;
  std::string message;
};

/// Values at or below this count as exact (no order is reported).
inline constexpr double kExactThreshold = 1e-10;

/// Levels h, h/2, h/4, …; cfg.levels >= 3. With a closed-form solution the
/// quantities are the solve error and the truncation error of the exact
/// solution, otherwise the fitted c and d (orders from successive
/// differences). A failing level ends the table with status "failed".
ConvergenceResult run_convergence(const ExperimentConfig& cfg);

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  /// "<=", ">=", "in" (value within ±threshold of the target in detail) or "info".
  std::string relation;
  bool pass = false;
  std::string detail;
};

std::vector<VerifyCheck> run_verify(const ExperimentConfig& cfg);

/// CLI entry points. Each writes its CSVs into output_directory(cfg), logs a
/// short summary to `log` and returns the process exit status.
int cmd_solve(const ExperimentConfig& cfg, std::ostream& log);
int cmd_plant_and_recover(const ExperimentConfig& cfg, std::ostream& log);
int cmd_convergence(const ExperimentConfig& cfg, std::ostream& log);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& log);
/// Summarizes every CSV in `dir` into report.csv (and plots with svg).
int cmd_report(const std::filesystem::path& dir, bool svg, std::ostream& log);

void write_recovery_csv(std::ostream& os, const RecoveryResult& r);
void write_convergence_csv(std::ostream& os, const ConvergenceResult& r);
void write_verify_csv(std::ostream& os, const std::vector<VerifyCheck>& checks);

}  // namespace extasym
