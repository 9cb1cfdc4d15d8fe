#pragma once

#include "extasym/grid.hpp"
#include "extasym/operators.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace extasym {

/// Linearized coefficients a(x) = ∫₀¹ DF(t D²u(x) + (1−t) A) dt on the
/// interior nodes (indexed by interior slot) and their limit a_∞ = DF(A).
struct CoefficientField {
  std::shared_ptr<const AnnulusGrid> grid;
  std::vector<SymMatrix> a;
  SymMatrix a_inf;
  /// Interior slots where two Bellman members were within 1e−9 at some
  /// quadrature point, so the piecewise-constant integrand may be
  /// under-resolved.
  std::vector<std::int32_t> kink_slots;
};

/// Fixed 8-point Gauss–Legendre in t. Requires |F(A)| <= a_tol.
CoefficientField linearized_coeffs(const OperatorSpec& op, const Field& u, const SymMatrix& A, double a_tol = 1e-6);

/// Builds a coefficient field from a closed-form a(x) (used for synthetic
/// decay checks).
CoefficientField coefficient_field_from(std::shared_ptr<const AnnulusGrid> grid,
                                        const std::function<SymMatrix(const Point&)>& a, const SymMatrix& a_inf);

/// Per-shell statistic for log-log decay fits.
struct ShellStat {
  double r_lo = 0.0;
  double r_hi = 0.0;
  /// Radius of the node attaining the maximum.
  double r = 0.0;
  double value = 0.0;
  std::size_t count = 0;
  bool excluded = false;
};

struct DecayFit {
  bool applicable = false;
  double exponent = 0.0;
  double fit_residual = 0.0;
  std::vector<ShellStat> shells;
  std::string note;
};

/// Slope of log max_shell ‖a(x) − a_∞‖₂ against log r. Shells are
/// [edges[k], edges[k+1]); at least three are required. Shells whose
/// deviation is <= 1e−14 are excluded.
DecayFit coeff_decay_rate(const CoefficientField& cf, const std::vector<double>& edges);

struct CertificateShell {
  double r = 0.0;
  /// max over samples of ‖a(x) − I‖₂.
  double eps = 0.0;
  /// α² − ε α (3 − α).
  double margin = 0.0;
  /// min over samples of a(x):D²v(x).
  double min_value = 0.0;
  Point worst_point;
  bool ok = false;
};

struct Certificate {
  double R_alpha = 0.0;
  std::size_t shell_index = 0;
  std::vector<CertificateShell> shells;
};

/// Closed-form Hessian of v = |x|^α.
SymMatrix power_hessian(const Point& x, double alpha);

/// Subsolution certificate for v = |x|^α in the plane. A sampled circle
/// qualifies when both the measured quantity a:D²v and the bound
/// α² − ε(r)α(3−α) are nonnegative; R_α is the smallest sampled radius from
/// which every larger circle qualifies.
Certificate subsolution_certificate(const std::function<SymMatrix(const Point&)>& a, double alpha,
                                    const std::vector<double>& radii, int samples_per_shell = 64);

/// Node coordinates followed by the upper-triangle entries a11, a12, ….
void write_coefficients_csv(std::ostream& os, const CoefficientField& cf);

}  // namespace extasym
