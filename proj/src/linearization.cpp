#include "extasym/linearization.hpp"

#include "extasym/csv.hpp"
#include "extasym/exact_solutions.hpp"
#include "extasym/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace extasym {

namespace {

// Gauss–Legendre nodes and weights on [−1, 1], 8 points.
constexpr std::array<double, 8> kGlNodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                         -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                         0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                           0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};

bool near_switch(const BellmanMaxOp& op, const SymMatrix& M) {
  if (op.family.size() < 2) return false;
  double best = -std::numeric_limits<double>::infinity(), second = best;
  for (const BellmanMember& m : op.family) {
    const double v = m.B.frobenius_dot(M) + m.c;
    if (v > best) {
      second = best;
      best = v;
    } else if (v > second) {
      second = v;
    }
  }
  return best - second <= 1e-9;
}

}  // namespace

CoefficientField linearized_coeffs(const OperatorSpec& op, const Field& u, const SymMatrix& A, double a_tol) {
  const AnnulusGrid& g = u.grid();
  if (A.dim() != g.dim()) throw InvalidInput("linearized_coeffs: A has the wrong dimension");
  const double FA = evaluate(op, A);
  if (std::abs(FA) > a_tol) {
    std::ostringstream os;
    os << "linearized_coeffs: |F(A)| = " << std::abs(FA) << " exceeds " << a_tol;
    throw InvalidInput(os.str());
  }
  const auto interior = g.interior();
  const std::size_t m = interior.size();
  CoefficientField cf{u.grid_ptr(), std::vector<SymMatrix>(m), gradient(op, A), {}};
  std::vector<char> kink(m, 0);
  const BellmanMaxOp* bell = op.is_bellman() ? &op.bellman() : nullptr;

#pragma omp parallel for schedule(static)
  for (std::int64_t si = 0; si < static_cast<std::int64_t>(m); ++si) {
    const auto s = static_cast<std::size_t>(si);
    const SymMatrix H = hessian_at(u, interior[s]);
    SymMatrix acc(g.dim());
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      const double t = 0.5 * (1.0 + kGlNodes[q]);
      const SymMatrix M = H * t + A * (1.0 - t);
      acc += gradient(op, M) * (0.5 * kGlWeights[q]);
      if (bell && near_switch(*bell, M)) kink[s] = 1;
    }
    cf.a[s] = acc;
  }
  for (std::size_t s = 0; s < m; ++s)
    if (kink[s]) cf.kink_slots.push_back(static_cast<std::int32_t>(s));
  return cf;
}

CoefficientField coefficient_field_from(std::shared_ptr<const AnnulusGrid> grid,
                                        const std::function<SymMatrix(const Point&)>& a, const SymMatrix& a_inf) {
  CoefficientField cf{grid, {}, a_inf, {}};
  for (std::int32_t node : grid->interior()) cf.a.push_back(a(grid->coord(node)));
  return cf;
}

DecayFit coeff_decay_rate(const CoefficientField& cf, const std::vector<double>& edges) {
  if (edges.size() < 4) throw InvalidInput("coeff_decay_rate: need at least three shells");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw InvalidInput("coeff_decay_rate: shell edges must increase");
  const AnnulusGrid& g = *cf.grid;
  DecayFit fit;
  std::vector<double> rs, vs;
  int excluded = 0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    ShellStat st{edges[k], edges[k + 1]};
    for (std::int32_t node : g.shell_nodes(edges[k], edges[k + 1])) {
      const double dev = (cf.a[g.interior_slot(node)] - cf.a_inf).spectral_norm();
      ++st.count;
      if (dev > st.value) {
        st.value = dev;
        st.r = g.radius(node);
      }
    }
    st.excluded = st.count == 0 || st.value <= 1e-14;
    if (st.excluded) {
      ++excluded;
    } else {
      rs.push_back(st.r);
      vs.push_back(st.value);
    }
    fit.shells.push_back(st);
  }
  if (excluded) fit.note = std::to_string(excluded) + " shell(s) excluded with zero deviation";
  if (rs.size() < 2) {
    fit.note = "not applicable: fewer than two shells with nonzero deviation";
    return fit;
  }
  const LogLogFit ll = loglog_fit(rs, vs);
  fit.applicable = true;
  fit.exponent = ll.slope;
  fit.fit_residual = ll.rms_residual;
  return fit;
}

SymMatrix power_hessian(const Point& x, double alpha) {
  const double r2 = x.squaredNorm();
  if (r2 == 0.0) throw DomainError("power_hessian: singular at x = 0");
  const double r = std::sqrt(r2);
  const int n = static_cast<int>(x.size());
  SymMatrix H = SymMatrix::identity(n, alpha * std::pow(r, alpha - 2.0));
  H += SymMatrix::outer(x) * (alpha * (alpha - 2.0) * std::pow(r, alpha - 4.0));
  return H;
}

Certificate subsolution_certificate(const std::function<SymMatrix(const Point&)>& a, double alpha,
                                    const std::vector<double>& radii, int samples_per_shell) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("subsolution_certificate: alpha must lie in (0, 1)");
  if (radii.empty()) throw InvalidInput("subsolution_certificate: no shells");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw InvalidInput("subsolution_certificate: radii must increase");
  if (!(radii.front() > 0.0)) throw InvalidInput("subsolution_certificate: radii must be positive");

  Certificate cert;
  const SymMatrix I = SymMatrix::identity(2);
  for (double r : radii) {
    CertificateShell sh;
    sh.r = r;
    sh.min_value = std::numeric_limits<double>::infinity();
    const std::vector<double> one{r};
    for (const Point& x : sphere_samples(2, one, samples_per_shell)) {
      const SymMatrix ax = a(x);
      if (ax.dim() != 2) throw InvalidInput("subsolution_certificate: coefficients must be 2x2");
      sh.eps = std::max(sh.eps, (ax - I).spectral_norm());
      const double q = ax.frobenius_dot(power_hessian(x, alpha));
      if (q < sh.min_value) {
        sh.min_value = q;
        sh.worst_point = x;
      }
    }
    sh.margin = alpha * alpha - sh.eps * alpha * (3.0 - alpha);
    // A margin that vanishes exactly may evaluate to −ulp; treat it as zero.
    sh.ok = sh.margin >= -1e-12 * alpha * alpha && sh.min_value >= 0.0;
    cert.shells.push_back(sh);
  }
  std::size_t first = cert.shells.size();
  for (std::size_t k = cert.shells.size(); k-- > 0;) {
    if (!cert.shells[k].ok) break;
    first = k;
  }
  if (first == cert.shells.size()) {
    const CertificateShell& last = cert.shells.back();
    std::ostringstream os;
    os << "subsolution_certificate: no shell qualifies; outermost shell r = " << last.r << " has margin "
       << last.margin << " and min a:D2v = " << last.min_value << " at (" << last.worst_point.transpose() << ")";
    throw Error(os.str());
  }
  cert.shell_index = first;
  cert.R_alpha = cert.shells[first].r;
  return cert;
}

void write_coefficients_csv(std::ostream& os, const CoefficientField& cf) {
  const AnnulusGrid& g = *cf.grid;
  const int n = g.dim();
  std::vector<std::string> cols;
  for (int i = 0; i < n; ++i) cols.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) cols.push_back("a" + std::to_string(i + 1) + std::to_string(j + 1));
  CsvWriter csv(os, "coefficients", 1, cols);
  const auto interior = g.interior();
  for (std::size_t s = 0; s < interior.size(); ++s) {
    const Point x = g.coord(interior[s]);
    std::vector<double> row;
    for (int i = 0; i < n; ++i) row.push_back(x(i));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) row.push_back(cf.a[s](i, j));
    csv.row(row);
  }
}

}  // namespace extasym
