#pragma once

#include "extasym/grid.hpp"
#include "extasym/linearization.hpp"
#include "extasym/numerics.hpp"
#include "extasym/operators.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace extasym {

/// `count` shells with geometrically spaced edges from r_lo to r_hi.
std::vector<double> log_shell_edges(double r_lo, double r_hi, int count);
/// `count` shells of equal width.
std::vector<double> linear_shell_edges(double r_lo, double r_hi, int count);

/// Mean discrete Hessian over the outermost shell [edges[k−1], edges[k]).
/// Needs at least 8 interior nodes in it.
SymMatrix estimate_A(const Field& u, const std::vector<double>& edges);

struct FitOptions {
  /// Extra passes that subtract the fitted Γ and tail Hessians from the
  /// outer-shell average before re-estimating A.
  int refine_passes = 3;
  /// Replaces DF(Â)^{-1} as the metric of Γ and the tail (diagnostics only).
  std::optional<SymMatrix> metric_override;
  /// Drop the tail columns from the basis.
  bool include_tail = true;
};

struct ShellResidual {
  double r_lo = 0.0;
  double r_hi = 0.0;
  double r = 0.0;
  double max_residual = 0.0;
  std::size_t count = 0;
};

/// u ≈ ½xᵀAx + b·x + c + dΓ(x) + (e·x)(xᵀ Minv x)^{−n/2}, Minv = DF(A)^{-1}.
/// b is the total linear coefficient; e is expressed in the metric Minv.
struct ExpansionFit {
  int n = 0;
  SymMatrix A;
  Point b;
  double c = 0.0;
  double d = 0.0;
  Point e;
  SymMatrix metric;
  double F_at_A = 0.0;
  /// Residual ~ r^{1−n−alpha_hat}.
  double alpha_hat = 0.0;
  bool alpha_applicable = false;
  /// sqrt(Σ w r² / Σ w) over all shell nodes.
  double weighted_rms = 0.0;
  std::vector<ShellResidual> shell_diagnostics;

  /// Value of the fitted expansion at x.
  double value(const Point& x) const;
};

/// Weighted least squares of u − ½xᵀÂx over the shells against
/// {x₁..x_n, 1, Γ, tail₁..tail_n}. Each node in shell k weighs
/// r_k^{n−1} / count_k, r_k the shell midpoint.
ExpansionFit fit_expansion(const OperatorSpec& op, const Field& u, const std::vector<double>& edges,
                           const FitOptions& opts = {});

/// Log-log decay of max_shell |u − ½xᵀAx − b·x − c − dΓ| (optionally also
/// minus the tail), using the node radius attaining each maximum.
DecayFit expansion_residual_decay(const ExpansionFit& fit, const Field& u, const std::vector<double>& edges,
                                  bool remove_tail);

/// Log-log slope of max_shell ‖D²_h u − A‖₂. Shells below 1e−13 are excluded.
DecayFit hessian_decay_probe(const Field& u, const SymMatrix& A, const std::vector<double>& edges);

/// K[E](x) = |x|^{2−n} E(x/|x|²).
double kelvin_transform(const ScalarFn& E, const Point& x, int n);

struct KelvinCheck {
  double max_deviation = 0.0;
  double max_lhs = 0.0;
  double max_rhs = 0.0;
};

/// Compares Δ_h K[E](x) with |x|^{−n−2}(Δ_h E)(x/|x|²), both by central
/// differences with the same step.
KelvinCheck kelvin_identity_check(const ScalarFn& E, std::span<const Point> samples, double step);

/// max |K[K[E]](x) − E(x)| over the samples.
double kelvin_involution_error(const ScalarFn& E, std::span<const Point> samples);

void write_fit_csv(std::ostream& os, const ExpansionFit& fit);
void write_shell_csv(std::ostream& os, const ExpansionFit& fit);

}  // namespace extasym
