#include "extasym/numerics.hpp"

#include <cmath>

namespace extasym {

SymMatrix fd_hessian(const ScalarFn& f, const Point& x, double step) {
  const int n = static_cast<int>(x.size());
  SymMatrix H(n);
  const double f0 = f(x);
  const double inv_h2 = 1.0 / (step * step);
  for (int i = 0; i < n; ++i) {
    Point p = x, m = x;
    p(i) += step;
    m(i) -= step;
    H.set(i, i, (f(p) - 2.0 * f0 + f(m)) * inv_h2);
    for (int j = i + 1; j < n; ++j) {
      Point pp = x, pm = x, mp = x, mm = x;
      pp(i) += step, pp(j) += step;
      pm(i) += step, pm(j) -= step;
      mp(i) -= step, mp(j) += step;
      mm(i) -= step, mm(j) -= step;
      H.set(i, j, (f(pp) - f(pm) - f(mp) + f(mm)) * 0.25 * inv_h2);
    }
  }
  return H;
}

double fd_laplacian(const ScalarFn& f, const Point& x, double step) {
  const int n = static_cast<int>(x.size());
  const double f0 = f(x);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Point p = x, m = x;
    p(i) += step;
    m(i) -= step;
    sum += f(p) - 2.0 * f0 + f(m);
  }
  return sum / (step * step);
}

LogLogFit loglog_fit(std::span<const double> r, std::span<const double> y) {
  if (r.size() != y.size()) throw InvalidInput("loglog_fit: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0) || !(y[i] > 0.0)) continue;
    lx.push_back(std::log(r[i]));
    ly.push_back(std::log(y[i]));
  }
  m = static_cast<int>(lx.size());
  if (m < 2) throw InvalidInput("loglog_fit: need at least two positive samples");
  for (int i = 0; i < m; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = m * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw InvalidInput("loglog_fit: radii are not distinct");
  LogLogFit fit;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  double ss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double res = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += res * res;
  }
  fit.rms_residual = std::sqrt(ss / m);
  fit.points = m;
  return fit;
}

std::vector<double> observed_orders(std::span<const double> errors) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) out.push_back(std::log2(errors[k] / errors[k + 1]));
  return out;
}

}  // namespace extasym
