#include "extasym/exact_solutions.hpp"

#include "extasym/operators.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace extasym {

void PlantedExpansion::validate() const {
  if (n < 2 || n > kMaxDim) throw InvalidInput("PlantedExpansion: unsupported dimension");
  if (B.dim() != n || A.dim() != n || b.size() != n || e.size() != n)
    throw InvalidInput("PlantedExpansion: dimension mismatch among coefficients");
  if (!(B.eigenvalues()(0) > 0.0)) throw InvalidInput("PlantedExpansion: B must be SPD");
  const double t = B.frobenius_dot(A);
  if (std::abs(t) > 1e-12 * std::max(1.0, A.max_abs_entry()))
    throw InvalidInput("PlantedExpansion: tr(BA) = " + std::to_string(t) + " is not zero");
  if (!std::isfinite(c) || !std::isfinite(d) || !b.allFinite() || !e.allFinite())
    throw InvalidInput("PlantedExpansion: non-finite coefficient");
}

SymMatrix PlantedExpansion::metric() const { return invert_spd(B).inverse; }

SymMatrix make_trace_free(const SymMatrix& A, const SymMatrix& B) {
  const double t = B.frobenius_dot(A);
  const double bb = B.frobenius_dot(B);
  return A - B * (t / bb);
}

double planted_value(const PlantedExpansion& p, const Point& x) {
  if (x.size() != p.n) throw InvalidInput("planted_value: dimension mismatch");
  if (x.squaredNorm() == 0.0) throw DomainError("planted_value: singular at x = 0");
  double u = 0.5 * p.A.quadratic_form(x) + p.b.dot(x) + p.c;
  if (p.d != 0.0 || p.e.squaredNorm() != 0.0) {
    const SymMatrix Minv = p.metric();
    if (p.d != 0.0) u += p.d * gamma_eval(Minv, x, p.n);
    u += tail_eval(p.e, Minv, x, p.n);
  }
  return u;
}

double planted_residual_check(const PlantedExpansion& p, std::span<const Point> samples, double step) {
  p.validate();
  if (!(step > 0.0)) throw InvalidInput("planted_residual_check: step must be positive");
  // The metric is constant; hoist it out of the stencil evaluations.
  const SymMatrix Minv = p.metric();
  const ScalarFn u = [&](const Point& x) {
    double v = 0.5 * p.A.quadratic_form(x) + p.b.dot(x) + p.c;
    if (p.d != 0.0) v += p.d * gamma_eval(Minv, x, p.n);
    v += tail_eval(p.e, Minv, x, p.n);
    return v;
  };
  double worst = 0.0;
  for (const Point& x : samples) {
    if (x.norm() < 10.0 * step) throw InvalidInput("planted_residual_check: sample within 10*step of the origin");
    worst = std::max(worst, std::abs(p.B.frobenius_dot(fd_hessian(u, x, step))));
  }
  return worst;
}

double pucci_radial_exponent(double lambda, double Lambda, int n) {
  if (!(lambda > 0.0) || lambda > Lambda) throw InvalidInput("pucci_radial_exponent: requires 0 < lambda <= Lambda");
  if (n < 2) throw InvalidInput("pucci_radial_exponent: n must be >= 2");
  return 1.0 - (n - 1) * lambda / Lambda;
}

double pucci_radial_profile(double lambda, double Lambda, int n, const Point& x) {
  const double p = pucci_radial_exponent(lambda, Lambda, n);
  const double r = x.norm();
  if (r == 0.0) throw DomainError("pucci_radial_profile: singular at x = 0");
  return std::pow(r, p);
}

double pucci_radial_residual(double lambda, double Lambda, int n, std::span<const Point> samples, double step) {
  const double p = pucci_radial_exponent(lambda, Lambda, n);
  if (!((n - 1) * lambda / Lambda > 1.0))
    throw InvalidInput("pucci_radial_residual: (n-1)lambda/Lambda must exceed 1; otherwise r^" + std::to_string(p) +
                       " is not a decaying PucciPlus solution");
  const OperatorSpec op = OperatorSpec::pucci_plus(lambda, Lambda);
  const ScalarFn u = [&](const Point& x) { return std::pow(x.norm(), p); };
  double worst = 0.0;
  for (const Point& x : samples) {
    if (x.size() != n) throw InvalidInput("pucci_radial_residual: sample dimension mismatch");
    if (x.norm() < 10.0 * step) throw InvalidInput("pucci_radial_residual: sample within 10*step of the origin");
    worst = std::max(worst, std::abs(evaluate(op, fd_hessian(u, x, step))));
  }
  return worst;
}

std::vector<Point> sphere_samples(int n, std::span<const double> radii, int per_shell, unsigned seed) {
  std::vector<Point> out;
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (double r : radii) {
    for (int k = 0; k < per_shell; ++k) {
      Point x(n);
      if (n == 2) {
        const double t = 2.0 * std::numbers::pi * (k + 0.5) / per_shell;
        x << std::cos(t), std::sin(t);
      } else if (n == 3) {
        const double z = 1.0 - 2.0 * (k + 0.5) / per_shell;
        const double s = std::sqrt(1.0 - z * z);
        const double t = golden * k;
        x << s * std::cos(t), s * std::sin(t), z;
      } else {
        for (int i = 0; i < n; ++i) x(i) = gauss(rng);
        x.normalize();
      }
      out.push_back(r * x);
    }
  }
  return out;
}

}  // namespace extasym
