#pragma once

#include "extasym/sym_matrix.hpp"

#include <functional>
#include <span>
#include <vector>

namespace extasym {

using ScalarFn = std::function<double(const Point&)>;

/// Central second differences of f at x: (f(x+he_i) − 2f(x) + f(x−he_i))/h²
/// on the diagonal, the symmetric 4-point cross difference off it.
SymMatrix fd_hessian(const ScalarFn& f, const Point& x, double step);

/// Trace of fd_hessian, via the 2n+1 point Laplacian.
double fd_laplacian(const ScalarFn& f, const Point& x, double step);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// RMS residual of the fit in log space.
  double rms_residual = 0.0;
  int points = 0;
};

/// Least-squares line through (log r, log y). Needs >= 2 points with y > 0.
LogLogFit loglog_fit(std::span<const double> r, std::span<const double> y);

/// Observed orders log2(e_k / e_{k+1}) for a sequence of errors at h, h/2, h/4, ...
std::vector<double> observed_orders(std::span<const double> errors);

}  // namespace extasym
