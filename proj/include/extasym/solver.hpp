#pragma once

#include "extasym/grid.hpp"
#include "extasym/operators.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace extasym {

struct SolveReport {
  int iterations = 0;
  /// Max-norm residual of F(D²u) after each outer iteration.
  std::vector<double> residual_history;
  double final_residual = 0.0;
  double wall_time = 0.0;
  bool converged = false;
  std::string method;
  std::string linear_solver;
  long linear_iterations = 0;
  int threads = 1;
  std::string message;
};

class SolveFailure : public Error {
public:
  SolveFailure(const std::string& what, SolveReport report) : Error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

private:
  SolveReport report_;
};

enum class LinearSolverKind { Auto, SparseLU, BiCGSTAB };

struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 50;
  double damping = 1.0;
  LinearSolverKind linear = LinearSolverKind::Auto;
  /// Relative residual required of every inner linear solve.
  double linear_tol = 1e-10;
};

struct Solution {
  Field u;
  SolveReport report;
};

/// Solves Σ G(x):δ²u(x) = rhs(x) at every interior node with the boundary
/// values already present in `boundary`. `G` and `rhs` are indexed by
/// interior slot. Returns the field and the relative linear residual.
struct LinearResult {
  Field u;
  double relative_residual = 0.0;
  long iterations = 0;
  std::string solver;
};
LinearResult solve_linear_system(const Field& boundary, const std::vector<SymMatrix>& G,
                                 const std::vector<double>& rhs, const SolverOptions& opts = {});

/// tr(B D²u) = 0 with Dirichlet data g.
Solution linear_solve(const SymMatrix& B, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                      const SolverOptions& opts = {});

/// Howard iteration for a BellmanMax operator.
Solution policy_iteration(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                          const SolverOptions& opts = {});

/// Damped Newton with halving line search, linearized through gradient().
Solution newton_solve(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                      const SolverOptions& opts = {}, const std::optional<Field>& initial = std::nullopt);

/// Linear, policy or Newton according to the operator kind.
Solution solve_dirichlet(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                         const SolverOptions& opts = {});

struct ProbeLevel {
  double radius = 0.0;
  /// u − u(anchor) − ∇u(anchor)·(x − anchor).
  Field normalized;
  /// Mean discrete Hessian over interior nodes with |x| in [R/2, R).
  SymMatrix shell_hessian;
  /// Spectral norm of the change from the previous radius (0 for the first).
  double drift = 0.0;
  SolveReport report;
};

/// Solves on boxes of half-width R for each radius (fixed r_in and h) with
/// Dirichlet data growth_data, normalizes at the anchor node and records the
/// shell-averaged Hessian.
std::vector<ProbeLevel> expanding_domain_probe(const OperatorSpec& op, int n, double r_in, double h,
                                               const PointFn& growth_data, const std::vector<double>& radii,
                                               const SolverOptions& opts = {});

void write_report_csv(std::ostream& os, const SolveReport& r);

}  // namespace extasym
