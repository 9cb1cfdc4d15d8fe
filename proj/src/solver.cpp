#include "extasym/solver.hpp"

#include "extasym/csv.hpp"
#include "extasym/kernels.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace extasym {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Direct factorization is used while fill-in stays affordable.
bool prefer_direct(int n, std::size_t unknowns) {
  return n == 2 ? unknowns <= 400000 : unknowns <= 40000;
}

void check_grid_op(const OperatorSpec& op, const AnnulusGrid& g) {
  if (op.dim() != 0 && op.dim() != g.dim())
    throw InvalidInput("operator dimension " + std::to_string(op.dim()) + " does not match grid dimension " +
                       std::to_string(g.dim()));
}

double max_norm_residual(const OperatorSpec& op, const Field& u) {
  return max_abs(assemble_residual(op, u));
}

}  // namespace

LinearResult solve_linear_system(const Field& boundary, const std::vector<SymMatrix>& G,
                                 const std::vector<double>& rhs, const SolverOptions& opts) {
  const AnnulusGrid& g = boundary.grid();
  const int n = g.dim();
  const auto interior = g.interior();
  const std::size_t m = interior.size();
  if (G.size() != m || rhs.size() != m) throw InvalidInput("solve_linear_system: coefficient count mismatch");

  // Rows are scaled by h².
  const double h2 = g.h() * g.h();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m * (1 + g.stencil_width()));
  Vec b(static_cast<Eigen::Index>(m));
  std::vector<double> w(g.stencil_width());
  for (std::size_t s = 0; s < m; ++s) {
    const SymMatrix& Gs = G[s];
    if (!Gs.all_finite()) throw InvalidInput("solve_linear_system: non-finite coefficient at node " +
                                             std::to_string(interior[s]));
    double center = 0.0;
    int k = 0;
    for (int i = 0; i < n; ++i) {
      w[k++] = Gs(i, i);
      w[k++] = Gs(i, i);
      center -= 2.0 * Gs(i, i);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double q = 0.5 * Gs(i, j);
        w[k++] = q;
        w[k++] = -q;
        w[k++] = -q;
        w[k++] = q;
      }
    double bs = h2 * rhs[s];
    const auto row = static_cast<Eigen::Index>(s);
    trip.emplace_back(row, row, center);
    const auto st = g.stencil(s);
    for (int q = 0; q < g.stencil_width(); ++q) {
      if (w[q] == 0.0) continue;
      const std::int32_t nb = st[q];
      const std::int32_t col = g.interior_slot(nb);
      if (col >= 0)
        trip.emplace_back(row, col, w[q]);
      else
        bs -= w[q] * boundary[nb];
    }
    b(row) = bs;
  }
  SpMat A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();

  LinearResult out{boundary, 0.0, 0, {}};
  Vec x;
  const double bnorm = b.norm();
  auto rel_residual = [&](const Vec& sol) {
    const double r = (A * sol - b).norm();
    return bnorm > 0.0 ? r / bnorm : r;
  };

  LinearSolverKind kind = opts.linear;
  if (kind == LinearSolverKind::Auto)
    kind = prefer_direct(n, m) ? LinearSolverKind::SparseLU : LinearSolverKind::BiCGSTAB;

  auto direct = [&] {
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
      std::ostringstream os;
      os << "linear system is singular or ill-conditioned (SparseLU factorization failed: " << lu.lastErrorMessage()
         << ")";
      throw Error(os.str());
    }
    x = lu.solve(b);
    out.solver = "sparse_lu";
    out.iterations = 1;
  };

  // Iterative chain: Jacobi BiCGSTAB, then ILUT BiCGSTAB, then (Auto and
  // affordable only) SparseLU.
  auto iterate = [&](auto& it, const char* name) {
    it.setTolerance(opts.linear_tol * 1e-2);
    it.setMaxIterations(20000);
    it.compute(A);
    if (it.info() != Eigen::Success) return false;
    x = it.solve(b);
    out.solver = name;
    out.iterations += it.iterations();
    return it.info() == Eigen::Success && rel_residual(x) <= opts.linear_tol;
  };

  if (kind == LinearSolverKind::SparseLU) {
    direct();
  } else {
    Eigen::BiCGSTAB<SpMat> jacobi;
    bool ok = iterate(jacobi, "bicgstab_jacobi");
    if (!ok) {
      Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> ilut;
      ilut.preconditioner().setDroptol(1e-4);
      ilut.preconditioner().setFillfactor(4);
      ok = iterate(ilut, "bicgstab_ilut");
    }
    if (!ok) {
      if (opts.linear == LinearSolverKind::Auto && m <= 200000) {
        const long its = out.iterations;
        direct();
        out.solver = "sparse_lu(fallback)";
        out.iterations += its;
      } else {
        std::ostringstream os;
        os << "linear system: BiCGSTAB did not reach relative residual " << opts.linear_tol << " after "
           << out.iterations << " iterations";
        throw Error(os.str());
      }
    }
  }
  out.relative_residual = rel_residual(x);
  if (!x.allFinite()) throw Error("linear system: solution is not finite");
  if (!(out.relative_residual <= opts.linear_tol)) {
    std::ostringstream os;
    os << "linear system: relative residual " << out.relative_residual << " exceeds " << opts.linear_tol
       << " (matrix is likely ill-conditioned)";
    throw Error(os.str());
  }
  for (std::size_t s = 0; s < m; ++s) out.u[interior[s]] = x(static_cast<Eigen::Index>(s));
  return out;
}

Solution linear_solve(const SymMatrix& B, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                      const SolverOptions& opts) {
  Stopwatch clock;
  const OperatorSpec op = OperatorSpec::linear(B);
  check_grid_op(op, *grid);
  const Field boundary = impose_boundary(Field(grid), g);
  const std::size_t m = grid->interior_count();
  SolveReport rep;
  rep.method = "linear";
  rep.threads = kernel_threads();
  std::optional<LinearResult> lr;
  try {
    lr = solve_linear_system(boundary, std::vector<SymMatrix>(m, B), std::vector<double>(m, 0.0), opts);
  } catch (const SolveFailure&) {
    throw;
  } catch (const Error& e) {
    rep.message = e.what();
    rep.wall_time = clock.seconds();
    throw SolveFailure(std::string("linear_solve: ") + e.what(), rep);
  }
  rep.iterations = 1;
  rep.linear_solver = lr->solver;
  rep.linear_iterations = lr->iterations;
  rep.final_residual = lr->relative_residual;
  rep.residual_history = {max_norm_residual(op, lr->u)};
  rep.converged = true;
  rep.wall_time = clock.seconds();
  return {std::move(lr->u), rep};
}

Solution policy_iteration(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                          const SolverOptions& opts) {
  if (!op.is_bellman()) throw InvalidInput("policy_iteration: operator must be BellmanMax");
  if (!(opts.tol > 0.0)) throw InvalidInput("policy_iteration: tol must be positive");
  check_grid_op(op, *grid);
  Stopwatch clock;
  const BellmanMaxOp& bell = op.bellman();
  const Field boundary = impose_boundary(Field(grid), g);
  const std::size_t m = grid->interior_count();

  SolveReport rep;
  rep.method = "policy_iteration";
  rep.threads = kernel_threads();
  std::vector<int> policy(m, 0);
  std::vector<SymMatrix> G(m);
  std::vector<double> rhs(m);
  Field u = boundary;
  for (int it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t s = 0; s < m; ++s) {
      G[s] = bell.family[policy[s]].B;
      rhs[s] = -bell.family[policy[s]].c;
    }
    std::optional<LinearResult> lr;
    try {
      lr = solve_linear_system(boundary, G, rhs, opts);
    } catch (const Error& e) {
      rep.message = e.what();
      rep.wall_time = clock.seconds();
      throw SolveFailure(std::string("policy_iteration: inner linear solve failed: ") + e.what(), rep);
    }
    u = std::move(lr->u);
    rep.linear_solver = lr->solver;
    rep.linear_iterations += lr->iterations;
    rep.iterations = it;
    const double res = max_norm_residual(op, u);
    rep.residual_history.push_back(res);
    rep.final_residual = res;
    std::vector<int> next = policy_field(bell, u);
    const bool repeated = next == policy;
    if (res <= opts.tol || repeated) {
      rep.converged = true;
      rep.message = res <= opts.tol ? "residual below tolerance" : "policy repeated";
      rep.wall_time = clock.seconds();
      return {std::move(u), rep};
    }
    policy = std::move(next);
  }
  rep.wall_time = clock.seconds();
  rep.message = "max_iter exceeded";
  std::ostringstream os;
  os << "policy_iteration: no convergence in " << opts.max_iter << " iterations (last residual " << rep.final_residual
     << ")";
  throw SolveFailure(os.str(), rep);
}

Solution newton_solve(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                      const SolverOptions& opts, const std::optional<Field>& initial) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw InvalidInput("newton_solve: damping must lie in (0, 1]");
  if (!(opts.tol > 0.0)) throw InvalidInput("newton_solve: tol must be positive");
  check_grid_op(op, *grid);
  Stopwatch clock;
  SolveReport rep;
  rep.method = "newton";
  rep.threads = kernel_threads();
  Field u = impose_boundary(initial ? *initial : Field(grid), g);
  const auto interior = grid->interior();
  const std::size_t m = interior.size();
  const Field zero_boundary(grid);

  std::vector<double> R = assemble_residual(op, u);
  double res = max_abs(R);
  rep.final_residual = res;
  if (res <= opts.tol) {
    rep.converged = true;
    rep.message = "initial guess within tolerance";
    rep.wall_time = clock.seconds();
    return {std::move(u), rep};
  }
  for (int it = 1; it <= opts.max_iter; ++it) {
    const std::vector<SymMatrix> G = gradient_field(op, u);
    std::vector<double> rhs(m);
    for (std::size_t s = 0; s < m; ++s) rhs[s] = -R[s];
    std::optional<LinearResult> step;
    try {
      step = solve_linear_system(zero_boundary, G, rhs, opts);
    } catch (const Error& e) {
      rep.message = e.what();
      rep.wall_time = clock.seconds();
      throw SolveFailure(std::string("newton_solve: linearized solve failed: ") + e.what(), rep);
    }
    rep.linear_solver = step->solver;
    rep.linear_iterations += step->iterations;

    double t = opts.damping;
    bool accepted = false;
    Field trial = u;
    std::vector<double> R_trial;
    double res_trial = res;
    for (int halving = 0; halving <= 30; ++halving) {
      for (std::size_t s = 0; s < m; ++s) trial[interior[s]] = u[interior[s]] + t * step->u[interior[s]];
      R_trial = assemble_residual(op, trial);
      res_trial = max_abs(R_trial);
      if (res_trial < res || res_trial <= opts.tol) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    rep.iterations = it;
    if (!accepted) {
      rep.final_residual = res;
      rep.wall_time = clock.seconds();
      rep.message = "line search failed";
      std::ostringstream os;
      os << "newton_solve: residual " << res << " not reduced after 30 step halvings at iteration " << it;
      throw SolveFailure(os.str(), rep);
    }
    u = std::move(trial);
    R = std::move(R_trial);
    res = res_trial;
    rep.residual_history.push_back(res);
    rep.final_residual = res;
    if (res <= opts.tol) {
      rep.converged = true;
      rep.message = "residual below tolerance";
      rep.wall_time = clock.seconds();
      return {std::move(u), rep};
    }
  }
  rep.wall_time = clock.seconds();
  rep.message = "max_iter exceeded";
  std::ostringstream os;
  os << "newton_solve: no convergence in " << opts.max_iter << " iterations (last residual " << res << ")";
  throw SolveFailure(os.str(), rep);
}

Solution solve_dirichlet(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid, const PointFn& g,
                         const SolverOptions& opts) {
  if (op.is_linear()) return linear_solve(std::get<LinearOp>(op.kind()).B, std::move(grid), g, opts);
  if (op.is_bellman()) return policy_iteration(op, std::move(grid), g, opts);
  return newton_solve(op, std::move(grid), g, opts);
}

std::vector<ProbeLevel> expanding_domain_probe(const OperatorSpec& op, int n, double r_in, double h,
                                               const PointFn& growth_data, const std::vector<double>& radii,
                                               const SolverOptions& opts) {
  if (radii.empty()) throw InvalidInput("expanding_domain_probe: no radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 2.0 * r_in) throw InvalidInput("expanding_domain_probe: every radius must be >= 2 r_in");
    if (i && !(radii[i] > radii[i - 1])) throw InvalidInput("expanding_domain_probe: radii must increase");
  }
  std::vector<ProbeLevel> out;
  for (double R : radii) {
    auto grid = std::make_shared<const AnnulusGrid>(n, r_in, R, h);
    Solution sol = solve_dirichlet(op, grid, growth_data, opts);
    const std::size_t anchor = grid->anchor_node();
    const Point xa = grid->coord(anchor);
    const double ua = sol.u[anchor];
    const Point ga = gradient_at(sol.u, anchor);
    Field w(grid);
    for (std::size_t node = 0; node < grid->node_count(); ++node)
      w[node] = sol.u[node] - ua - ga.dot(grid->coord(node) - xa);

    const std::vector<std::int32_t> shell = grid->shell_nodes(0.5 * R, R);
    if (shell.empty()) throw InvalidInput("expanding_domain_probe: empty probe shell");
    SymMatrix mean(n);
    for (std::int32_t node : shell) mean += hessian_at(w, node);
    mean = mean * (1.0 / static_cast<double>(shell.size()));

    ProbeLevel level{R, std::move(w), mean, 0.0, sol.report};
    if (!out.empty()) level.drift = (mean - out.back().shell_hessian).spectral_norm();
    out.push_back(std::move(level));
  }
  return out;
}

void write_report_csv(std::ostream& os, const SolveReport& r) {
  CsvWriter csv(os, "solve_report", 1,
                {"iteration", "residual", "method", "linear_solver", "converged", "final_residual"});
  for (std::size_t i = 0; i < r.residual_history.size(); ++i)
    csv.row(std::vector<std::string>{std::to_string(i + 1), format_double(r.residual_history[i]), r.method,
                                     r.linear_solver, r.converged ? "true" : "false",
                                     format_double(r.final_residual)});
  // Converged on entry (Newton from an exact initial guess): one row at iteration 0.
  if (r.residual_history.empty())
    csv.row(std::vector<std::string>{"0", format_double(r.final_residual), r.method, r.linear_solver,
                                     r.converged ? "true" : "false", format_double(r.final_residual)});
}

}  // namespace extasym
