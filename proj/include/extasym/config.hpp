#pragma once

#include "extasym/exact_solutions.hpp"
#include "extasym/operators.hpp"
#include "extasym/solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace extasym {

/// Configuration error, carrying the offending line when known.
class ConfigError : public Error {
public:
  ConfigError(const std::string& what, int line) : Error(format(what, line)), line_(line) {}
  int line() const { return line_; }

private:
  static std::string format(const std::string& what, int line) {
    return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
  }
  int line_;
};

/// Raw "section.key" → value map with source line numbers. Format:
///
///   # comment
///   [section]
///   key = value
///
/// Keys outside the known schema are rejected.
class KeyValueConfig {
public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  /// "section.key=value" override; the key must be known.
  void set(const std::string& assignment);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;
  int line_of(const std::string& key) const;

private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> values_;
};

enum class BoundaryKind { Planted, Quadratic, PucciRadial, Zero };
enum class SolverMethod { Auto, Linear, Policy, Newton };

struct GridSpec {
  int n = 2;
  double r_in = 1.0;
  double r_out = 8.0;
  double h = 0.25;
};

struct ShellSpec {
  double r_lo = 0.0;  // 0: r_in + 2h
  double r_hi = 0.0;  // 0: r_out − h
  int count = 8;
  bool log_spacing = true;

  std::vector<double> edges(const GridSpec& g) const;
};

struct BoundarySpec {
  BoundaryKind kind = BoundaryKind::Planted;
  /// Planted / quadratic coefficients; for Quadratic only A, b, c are used.
  PlantedExpansion planted;
};

struct ExperimentConfig {
  OperatorSpec op = OperatorSpec::linear(SymMatrix::identity(2));
  GridSpec grid;
  BoundarySpec boundary;
  SolverMethod method = SolverMethod::Auto;
  SolverOptions solver;
  ShellSpec shells;
  std::string output_dir = "out";
  bool svg = false;
  std::uint64_t seed = 1;
  int levels = 3;
  double recovery_tolerance = 0.02;
  /// verify: synthetic certificate perturbation and exponents.
  double certificate_eps0 = 0.5;
  std::vector<double> certificate_alphas{0.25, 0.5, 0.75};
  int probe_trials = 2000;
};

/// Builds the typed configuration, reporting the line of any invalid value.
ExperimentConfig build_config(const KeyValueConfig& kv);

/// Exact solution for the configured boundary kind, if it has one.
std::optional<PointFn> exact_solution(const ExperimentConfig& cfg);
/// Boundary data for the configured boundary kind.
PointFn boundary_function(const ExperimentConfig& cfg);

}  // namespace extasym
