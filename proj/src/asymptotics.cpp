#include "extasym/asymptotics.hpp"

#include "extasym/csv.hpp"

#include <Eigen/QR>

#include <cmath>
#include <ostream>
#include <sstream>

namespace extasym {

std::vector<double> log_shell_edges(double r_lo, double r_hi, int count) {
  if (count < 1 || !(r_lo > 0.0) || !(r_hi > r_lo)) throw InvalidInput("log_shell_edges: bad range");
  std::vector<double> e(count + 1);
  for (int k = 0; k <= count; ++k) e[k] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(k) / count);
  e[count] = r_hi;
  return e;
}

std::vector<double> linear_shell_edges(double r_lo, double r_hi, int count) {
  if (count < 1 || !(r_hi > r_lo)) throw InvalidInput("linear_shell_edges: bad range");
  std::vector<double> e(count + 1);
  for (int k = 0; k <= count; ++k) e[k] = r_lo + (r_hi - r_lo) * k / count;
  e[count] = r_hi;
  return e;
}

namespace {

void check_edges(const std::vector<double>& edges, const char* what) {
  if (edges.size() < 2) throw InvalidInput(std::string(what) + ": need at least one shell");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw InvalidInput(std::string(what) + ": shell edges must increase");
}

std::vector<std::int32_t> outer_shell(const AnnulusGrid& g, const std::vector<double>& edges) {
  std::vector<std::int32_t> nodes = g.shell_nodes(edges[edges.size() - 2], edges.back());
  if (nodes.size() < 8)
    throw InvalidInput("estimate_A: outermost shell holds " + std::to_string(nodes.size()) +
                       " interior nodes; at least 8 are required");
  return nodes;
}

std::vector<std::string> basis_names(int n, bool tail) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
  names.push_back("1");
  names.push_back("gamma");
  if (tail)
    for (int i = 0; i < n; ++i) names.push_back("tail" + std::to_string(i + 1));
  return names;
}

void basis_row(const Point& x, const SymMatrix& Minv, int n, bool tail, double* out) {
  int k = 0;
  for (int i = 0; i < n; ++i) out[k++] = x(i);
  out[k++] = 1.0;
  out[k++] = gamma_eval(Minv, x, n);
  if (tail) {
    const double q = std::pow(Minv.quadratic_form(x), -0.5 * n);
    for (int i = 0; i < n; ++i) out[k++] = x(i) * q;
  }
}

// Γ and tail part of the fit, whose discrete Hessian is removed from the
// outer-shell average during refinement.
double singular_part(const ExpansionFit& f, const Point& x) {
  return f.d * gamma_eval(f.metric, x, f.n) + tail_eval(f.e, f.metric, x, f.n);
}

SymMatrix metric_for(const OperatorSpec& op, const SymMatrix& A, const FitOptions& opts) {
  if (opts.metric_override) return *opts.metric_override;
  const SymMatrix DF = gradient(op, A);
  const Point ev = DF.eigenvalues();
  if (ev(0) < 0.5 * op.lambda()) {
    std::ostringstream os;
    os << "fit_expansion: DF(A) has minimum eigenvalue " << ev(0) << " below lambda/2";
    throw Error(os.str());
  }
  const SpdInverse inv = invert_spd(DF);
  if (inv.ill_conditioned) throw Error("fit_expansion: DF(A) condition number exceeds 1e8");
  return inv.inverse;
}

}  // namespace

SymMatrix estimate_A(const Field& u, const std::vector<double>& edges) {
  check_edges(edges, "estimate_A");
  const AnnulusGrid& g = u.grid();
  const std::vector<std::int32_t> nodes = outer_shell(g, edges);
  SymMatrix mean(g.dim());
  for (std::int32_t node : nodes) mean += hessian_at(u, node);
  return mean * (1.0 / static_cast<double>(nodes.size()));
}

double ExpansionFit::value(const Point& x) const {
  return 0.5 * A.quadratic_form(x) + b.dot(x) + c + singular_part(*this, x);
}

ExpansionFit fit_expansion(const OperatorSpec& op, const Field& u, const std::vector<double>& edges,
                           const FitOptions& opts) {
  check_edges(edges, "fit_expansion");
  const AnnulusGrid& g = u.grid();
  const int n = g.dim();
  const std::vector<std::int32_t> outer = outer_shell(g, edges);
  const SymMatrix H_outer = estimate_A(u, edges);

  // Shell membership and weights.
  const std::size_t shells = edges.size() - 1;
  std::vector<std::vector<std::int32_t>> members(shells);
  std::vector<double> weight(shells);
  std::size_t rows = 0;
  for (std::size_t k = 0; k < shells; ++k) {
    members[k] = g.shell_nodes(edges[k], edges[k + 1]);
    const double rmid = 0.5 * (edges[k] + edges[k + 1]);
    weight[k] = members[k].empty() ? 0.0 : std::pow(rmid, n - 1) / static_cast<double>(members[k].size());
    rows += members[k].size();
  }
  const std::vector<std::string> names = basis_names(n, opts.include_tail);
  const int cols = static_cast<int>(names.size());
  if (rows < static_cast<std::size_t>(cols)) throw InvalidInput("fit_expansion: fewer shell nodes than unknowns");

  ExpansionFit fit;
  fit.n = n;
  fit.A = H_outer;
  fit.b = Point::Zero(n);
  fit.e = Point::Zero(n);

  for (int pass = 0; pass <= opts.refine_passes; ++pass) {
    if (pass > 0) {
      SymMatrix correction(n);
      const ScalarFn sing = [&](const Point& x) { return singular_part(fit, x); };
      for (std::int32_t node : outer) correction += fd_hessian(sing, g.coord(node), g.h());
      fit.A = H_outer - correction * (1.0 / static_cast<double>(outer.size()));
    }
    fit.metric = metric_for(op, fit.A, opts);

    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), cols);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < shells; ++k) {
      const double sw = std::sqrt(weight[k]);
      for (std::int32_t node : members[k]) {
        const Point x = g.coord(node);
        double row[2 * kMaxDim + 2];
        basis_row(x, fit.metric, n, opts.include_tail, row);
        for (int j = 0; j < cols; ++j) X(r, j) = sw * row[j];
        y(r) = sw * (u[node] - 0.5 * fit.A.quadratic_form(x));
        ++r;
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) {
      // Name the most collinear pair of (normalized) columns.
      double worst = -1.0;
      int wi = 0, wj = 1;
      for (int i = 0; i < cols; ++i)
        for (int j = i + 1; j < cols; ++j) {
          const double ni = X.col(i).norm(), nj = X.col(j).norm();
          const double cosv = (ni > 0 && nj > 0) ? std::abs(X.col(i).dot(X.col(j))) / (ni * nj) : 1.0;
          if (cosv > worst) {
            worst = cosv;
            wi = i;
            wj = j;
          }
        }
      std::ostringstream os;
      os << "fit_expansion: rank-deficient design (rank " << qr.rank() << " of " << cols << "); basis functions '"
         << names[wi] << "' and '" << names[wj] << "' are collinear on the shells (|cos| = " << worst << ")";
      throw Error(os.str());
    }
    const Eigen::VectorXd beta = qr.solve(y);
    int k = 0;
    for (int i = 0; i < n; ++i) fit.b(i) = beta(k++);
    fit.c = beta(k++);
    fit.d = beta(k++);
    if (opts.include_tail)
      for (int i = 0; i < n; ++i) fit.e(i) = beta(k++);
  }
  fit.F_at_A = evaluate(op, fit.A);

  // Residual diagnostics per shell.
  double ss = 0.0, sw_total = 0.0;
  std::vector<double> rs, vs;
  for (std::size_t k = 0; k < shells; ++k) {
    ShellResidual sr{edges[k], edges[k + 1]};
    for (std::int32_t node : members[k]) {
      const Point x = g.coord(node);
      const double res = std::abs(u[node] - fit.value(x));
      ss += weight[k] * res * res;
      sw_total += weight[k];
      ++sr.count;
      if (res > sr.max_residual) {
        sr.max_residual = res;
        sr.r = x.norm();
      }
    }
    if (sr.count > 0 && sr.max_residual > 0.0) {
      rs.push_back(sr.r);
      vs.push_back(sr.max_residual);
    }
    fit.shell_diagnostics.push_back(sr);
  }
  fit.weighted_rms = sw_total > 0.0 ? std::sqrt(ss / sw_total) : 0.0;
  if (rs.size() >= 3) {
    fit.alpha_hat = 1.0 - n - loglog_fit(rs, vs).slope;
    fit.alpha_applicable = true;
  }
  return fit;
}

DecayFit expansion_residual_decay(const ExpansionFit& fit, const Field& u, const std::vector<double>& edges,
                                  bool remove_tail) {
  check_edges(edges, "expansion_residual_decay");
  const AnnulusGrid& g = u.grid();
  DecayFit out;
  std::vector<double> rs, vs;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    ShellStat st{edges[k], edges[k + 1]};
    for (std::int32_t node : g.shell_nodes(edges[k], edges[k + 1])) {
      const Point x = g.coord(node);
      double model = 0.5 * fit.A.quadratic_form(x) + fit.b.dot(x) + fit.c + fit.d * gamma_eval(fit.metric, x, fit.n);
      if (remove_tail) model += tail_eval(fit.e, fit.metric, x, fit.n);
      const double res = std::abs(u[node] - model);
      ++st.count;
      if (res > st.value) {
        st.value = res;
        st.r = x.norm();
      }
    }
    st.excluded = st.count == 0 || st.value <= 0.0;
    if (!st.excluded) {
      rs.push_back(st.r);
      vs.push_back(st.value);
    }
    out.shells.push_back(st);
  }
  if (rs.size() < 2) {
    out.note = "not applicable: fewer than two populated shells";
    return out;
  }
  const LogLogFit ll = loglog_fit(rs, vs);
  out.applicable = true;
  out.exponent = ll.slope;
  out.fit_residual = ll.rms_residual;
  return out;
}

DecayFit hessian_decay_probe(const Field& u, const SymMatrix& A, const std::vector<double>& edges) {
  if (edges.size() < 4) throw InvalidInput("hessian_decay_probe: need at least three shells");
  check_edges(edges, "hessian_decay_probe");
  const AnnulusGrid& g = u.grid();
  DecayFit out;
  std::vector<double> rs, vs;
  int excluded = 0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    ShellStat st{edges[k], edges[k + 1]};
    for (std::int32_t node : g.shell_nodes(edges[k], edges[k + 1])) {
      const double dev = (hessian_at(u, node) - A).spectral_norm();
      ++st.count;
      if (dev > st.value) {
        st.value = dev;
        st.r = g.radius(node);
      }
    }
    st.excluded = st.count == 0 || st.value <= 1e-13;
    if (st.excluded) {
      ++excluded;
    } else {
      rs.push_back(st.r);
      vs.push_back(st.value);
    }
    out.shells.push_back(st);
  }
  if (excluded) out.note = std::to_string(excluded) + " shell(s) excluded below 1e-13";
  if (rs.size() < 2) {
    out.note = "not applicable: fewer than two shells above 1e-13";
    return out;
  }
  const LogLogFit ll = loglog_fit(rs, vs);
  out.applicable = true;
  out.exponent = ll.slope;
  out.fit_residual = ll.rms_residual;
  return out;
}

double kelvin_transform(const ScalarFn& E, const Point& x, int n) {
  if (x.size() != n) throw InvalidInput("kelvin_transform: dimension mismatch");
  const double r2 = x.squaredNorm();
  if (r2 == 0.0) throw DomainError("kelvin_transform: singular at x = 0");
  return std::pow(r2, 0.5 * (2 - n)) * E(x / r2);
}

KelvinCheck kelvin_identity_check(const ScalarFn& E, std::span<const Point> samples, double step) {
  if (!(step > 0.0)) throw InvalidInput("kelvin_identity_check: step must be positive");
  KelvinCheck out;
  for (const Point& x : samples) {
    const int n = static_cast<int>(x.size());
    const double r = x.norm();
    if (r < 10.0 * step) throw InvalidInput("kelvin_identity_check: sample too close to the origin");
    const Point y = x / (r * r);
    if (y.norm() < 10.0 * step) throw InvalidInput("kelvin_identity_check: sample inversion too close to the origin");
    const ScalarFn K = [&](const Point& z) { return kelvin_transform(E, z, n); };
    const double lhs = fd_laplacian(K, x, step);
    const double rhs = std::pow(r, -n - 2.0) * fd_laplacian(E, y, step);
    if (!std::isfinite(lhs) || !std::isfinite(rhs))
      throw InvalidInput("kelvin_identity_check: E is not finite near a sampled inversion");
    out.max_lhs = std::max(out.max_lhs, std::abs(lhs));
    out.max_rhs = std::max(out.max_rhs, std::abs(rhs));
    out.max_deviation = std::max(out.max_deviation, std::abs(lhs - rhs));
  }
  return out;
}

double kelvin_involution_error(const ScalarFn& E, std::span<const Point> samples) {
  double worst = 0.0;
  for (const Point& x : samples) {
    const int n = static_cast<int>(x.size());
    const ScalarFn K = [&](const Point& z) { return kelvin_transform(E, z, n); };
    worst = std::max(worst, std::abs(kelvin_transform(K, x, n) - E(x)));
  }
  return worst;
}

void write_fit_csv(std::ostream& os, const ExpansionFit& fit) {
  const int n = fit.n;
  std::vector<std::string> cols{"n"};
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) cols.push_back("A" + std::to_string(i + 1) + std::to_string(j + 1));
  for (int i = 0; i < n; ++i) cols.push_back("b" + std::to_string(i + 1));
  cols.push_back("c");
  cols.push_back("d");
  for (int i = 0; i < n; ++i) cols.push_back("e" + std::to_string(i + 1));
  cols.push_back("alpha_hat");
  cols.push_back("F_at_A");
  cols.push_back("weighted_rms");
  CsvWriter csv(os, "expansion_fit", 1, cols);
  std::vector<std::string> row{std::to_string(n)};
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) row.push_back(format_double(fit.A(i, j)));
  for (int i = 0; i < n; ++i) row.push_back(format_double(fit.b(i)));
  row.push_back(format_double(fit.c));
  row.push_back(format_double(fit.d));
  for (int i = 0; i < n; ++i) row.push_back(format_double(fit.e(i)));
  row.push_back(fit.alpha_applicable ? format_double(fit.alpha_hat) : "NA");
  row.push_back(format_double(fit.F_at_A));
  row.push_back(format_double(fit.weighted_rms));
  csv.row(row);
}

void write_shell_csv(std::ostream& os, const ExpansionFit& fit) {
  CsvWriter csv(os, "shell_diagnostics", 1, {"shell", "r_lo", "r_hi", "r_max", "max_residual", "count"});
  for (std::size_t k = 0; k < fit.shell_diagnostics.size(); ++k) {
    const ShellResidual& s = fit.shell_diagnostics[k];
    csv.row(std::vector<std::string>{std::to_string(k), format_double(s.r_lo), format_double(s.r_hi),
                                     format_double(s.r), format_double(s.max_residual), std::to_string(s.count)});
  }
}

}  // namespace extasym
