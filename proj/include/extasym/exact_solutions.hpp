#pragma once

#include "extasym/numerics.hpp"
#include "extasym/sym_matrix.hpp"

#include <span>
#include <vector>

namespace extasym {

/// Closed-form exterior solution of tr(B D²u) = 0:
///   u = ½xᵀAx + b·x + c + d Γ_B(x) + (e·x)(xᵀB⁻¹x)^{−n/2},
/// with Γ_B the fundamental solution in the metric B⁻¹.
struct PlantedExpansion {
  int n = 3;
  SymMatrix B;
  SymMatrix A;
  Point b;
  double c = 0.0;
  double d = 0.0;
  Point e;

  /// Throws InvalidInput unless B is SPD, tr(BA) = 0 to 1e−12 and all
  /// dimensions agree.
  void validate() const;
  /// Metric B⁻¹ used by Γ and the tail.
  SymMatrix metric() const;
};

/// Replaces A by its projection onto {tr(BA) = 0}.
SymMatrix make_trace_free(const SymMatrix& A, const SymMatrix& B);

double planted_value(const PlantedExpansion& p, const Point& x);

/// Max |tr(B · fd_hessian(u))| over the samples. Samples closer than
/// 10·step to the origin are rejected.
double planted_residual_check(const PlantedExpansion& p, std::span<const Point> samples, double step);

/// 1 − (n−1)λ/Λ.
double pucci_radial_exponent(double lambda, double Lambda, int n);

/// |x|^{1−(n−1)λ/Λ}; a PucciPlus solution away from 0 when (n−1)λ/Λ > 1.
double pucci_radial_profile(double lambda, double Lambda, int n, const Point& x);

/// Max |PucciPlus(fd_hessian(profile))| over the samples.
double pucci_radial_residual(double lambda, double Lambda, int n, std::span<const Point> samples, double step);

/// Deterministic sample points on spheres of the given radii in R^n
/// (golden-angle spiral in 3D, uniform angles in 2D, seeded otherwise).
std::vector<Point> sphere_samples(int n, std::span<const double> radii, int per_shell, unsigned seed = 7);

}  // namespace extasym
