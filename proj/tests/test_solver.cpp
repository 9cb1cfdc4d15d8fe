#include "extasym/csv.hpp"
#include "extasym/exact_solutions.hpp"
#include "extasym/kernels.hpp"
#include "extasym/solver.hpp"

#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <sstream>

using namespace extasym;

namespace {

std::shared_ptr<const AnnulusGrid> grid(int n, double r_in, double r_out, double h) {
  return std::make_shared<const AnnulusGrid>(n, r_in, r_out, h);
}

SymMatrix rotated(double th, double l1, double l2) {
  DenseSmall R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  DenseSmall D = DenseSmall::Zero(2, 2);
  D(0, 0) = l1;
  D(1, 1) = l2;
  return SymMatrix::from_dense(R * D * R.transpose());
}

PlantedExpansion plant2d() {
  PlantedExpansion p;
  p.n = 2;
  p.B = SymMatrix::from_upper(2, {1.5, 0.4, 0.8});
  p.A = make_trace_free(SymMatrix::from_upper(2, {1.0, 0.3, -0.5}), p.B);
  p.b = make_point({0.2, -0.1});
  p.c = 5;
  p.d = 3;
  p.e = make_point({0.8, -0.5});
  return p;
}

PointFn planted(const PlantedExpansion& p) {
  return [p](const Point& x) { return planted_value(p, x); };
}

double max_error(const Field& u, const PointFn& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < u.values().size(); ++i) e = std::max(e, std::abs(u[i] - exact(u.grid().coord(i))));
  return e;
}

double max_diff(const Field& a, const Field& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

// Two rotated anisotropic members; A is trace-free for member 1 and member 2
// sits below it at A, so member 1 is active at infinity.
struct BellmanSetup {
  OperatorSpec op;
  PlantedExpansion data;
};

BellmanSetup bellman_setup() {
  const SymMatrix B1 = rotated(0.3, 1.0, 2.0), B2 = rotated(1.2, 1.0, 2.5);
  PlantedExpansion p;
  p.n = 2;
  p.B = B1;
  p.A = make_trace_free(SymMatrix::from_upper(2, {1.0, 0.4, -0.3}), B1);
  p.b = make_point({0.2, -0.1});
  p.c = 1;
  p.d = 1;
  p.e = make_point({0.6, 0.4});
  const double c2 = -B2.frobenius_dot(p.A) - 0.5;
  return {OperatorSpec::bellman_max({{B1, 0.0}, {B2, c2}}), p};
}

}  // namespace

TEST_CASE("linear solve reproduces quadratics") {
  for (int n : {2, 3}) {
    const SymMatrix B = n == 2 ? SymMatrix::from_upper(2, {1.5, 0.4, 0.8})
                               : SymMatrix::from_upper(3, {1.6, 0.3, -0.2, 1.0, 0.1, 0.7});
    PlantedExpansion p;
    p.n = n;
    p.B = B;
    p.A = make_trace_free(n == 2 ? SymMatrix::from_upper(2, {1.0, 0.3, -0.5})
                                 : SymMatrix::from_upper(3, {1.0, 0.2, 0.0, -0.4, 0.3, 0.5}),
                          B);
    p.b = Point::Constant(n, 0.3);
    p.c = -2;
    p.e = Point::Zero(n);
    const Solution sol = linear_solve(B, grid(n, 1.0, n == 2 ? 6.0 : 5.0, 0.5), planted(p));
    CHECK(sol.report.converged);
    CHECK(sol.report.final_residual <= 1e-10);
    CHECK(max_error(sol.u, planted(p)) <= 1e-8);
  }
}

TEST_CASE("zero data gives the zero solution") {
  const Solution sol = linear_solve(SymMatrix::from_upper(2, {1.5, 0.4, 0.8}), grid(2, 1.0, 6.0, 0.25),
                                    [](const Point&) { return 0.0; });
  for (double v : sol.u.values()) CHECK(v == 0.0);
}

TEST_CASE("planted solutions converge at second order") {
  const PlantedExpansion p = plant2d();
  std::vector<double> err;
  for (double h : {0.25, 0.125, 0.0625}) err.push_back(max_error(linear_solve(p.B, grid(2, 1.0, 8.0, h), planted(p)).u, planted(p)));
  CHECK(std::log2(err[0] / err[1]) >= 1.8);
  CHECK(std::log2(err[1] / err[2]) >= 1.8);
}

TEST_CASE("direct and iterative linear solvers agree") {
  const PlantedExpansion p = plant2d();
  auto g = grid(2, 1.0, 8.0, 0.125);
  SolverOptions lu, it;
  lu.linear = LinearSolverKind::SparseLU;
  it.linear = LinearSolverKind::BiCGSTAB;
  const Solution a = linear_solve(p.B, g, planted(p), lu), b = linear_solve(p.B, g, planted(p), it);
  CHECK(a.report.linear_solver == "sparse_lu");
  CHECK(b.report.linear_solver.rfind("bicgstab", 0) == 0);
  CHECK(max_diff(a.u, b.u) <= 1e-8);
}

TEST_CASE("discrete comparison principle for diagonal coefficients") {
  // The narrow stencil is monotone when B is diagonal.
  const SymMatrix B = SymMatrix::diagonal({1.7, 0.6});
  auto g = grid(2, 1.0, 6.0, 0.25);
  const PointFn g1 = [](const Point& x) { return std::sin(x(0)) + 0.1 * x(1) * x(1); };
  const PointFn g2 = [&](const Point& x) { return g1(x) + 0.05 + 0.02 * std::cos(3 * x(1)) * std::cos(3 * x(1)); };
  const Solution u1 = linear_solve(B, g, g1), u2 = linear_solve(B, g, g2);
  for (std::size_t i = 0; i < g->node_count(); ++i) CHECK(u1.u[i] <= u2.u[i] + 1e-12);
}

TEST_CASE("policy iteration") {
  SUBCASE("singleton family matches the linear solve") {
    const SymMatrix B = SymMatrix::from_upper(2, {1.5, 0.4, 0.8});
    const PlantedExpansion p = plant2d();
    auto g = grid(2, 1.0, 6.0, 0.25);
    const Solution a = policy_iteration(OperatorSpec::bellman_max({{B, 0.0}}), g, planted(p));
    const Solution b = linear_solve(B, g, planted(p));
    CHECK(a.report.iterations == 1);
    CHECK(max_diff(a.u, b.u) <= 1e-13);
  }
  SUBCASE("scaled identities on a harmonic quadratic") {
    const auto op = OperatorSpec::bellman_max({{SymMatrix::identity(2), 0.0}, {SymMatrix::identity(2, 2.0), 0.0}});
    const PointFn q = [](const Point& x) { return 0.5 * (x(0) * x(0) - x(1) * x(1)) + 0.3 * x(0) * x(1) + 1.0; };
    const Solution sol = policy_iteration(op, grid(2, 1.0, 6.0, 0.25), q);
    CHECK(sol.report.iterations <= 2);
    CHECK(max_error(sol.u, q) <= 1e-8);
  }
  SUBCASE("anisotropic family converges with decreasing residuals") {
    const BellmanSetup s = bellman_setup();
    SolverOptions opts;
    opts.max_iter = 30;
    const Solution sol = policy_iteration(s.op, grid(2, 1.0, 8.0, 0.125), planted(s.data), opts);
    const auto& hist = sol.report.residual_history;
    REQUIRE(hist.size() >= 2);
    for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] < hist[i - 1]);
    CHECK(sol.report.final_residual <= opts.tol);
    CHECK(sol.report.converged);
    // Both members are active somewhere.
    const auto pol = policy_field(s.op.bellman(), sol.u);
    CHECK(std::count(pol.begin(), pol.end(), 1) > 0);
    CHECK(std::count(pol.begin(), pol.end(), 0) > 0);
  }
  SUBCASE("exceeding max_iter reports the history") {
    const BellmanSetup s = bellman_setup();
    SolverOptions opts;
    opts.max_iter = 1;
    try {
      policy_iteration(s.op, grid(2, 1.0, 8.0, 0.125), planted(s.data), opts);
      FAIL("expected a SolveFailure");
    } catch (const SolveFailure& e) {
      CHECK(e.report().residual_history.size() == 1);
      CHECK_FALSE(e.report().converged);
    }
  }
  CHECK_THROWS_AS(policy_iteration(OperatorSpec::pucci_plus(1, 2), grid(2, 1.0, 6.0, 0.5), planted(plant2d())),
                  InvalidInput);
}

TEST_CASE("Newton iteration") {
  SUBCASE("linear operators take one step") {
    const PlantedExpansion p = plant2d();
    auto g = grid(2, 1.0, 6.0, 0.25);
    const Solution a = newton_solve(OperatorSpec::linear(p.B), g, planted(p));
    CHECK(a.report.iterations == 1);
    CHECK(max_diff(a.u, linear_solve(p.B, g, planted(p)).u) <= 1e-10);
  }
  SUBCASE("agrees with policy iteration on a Bellman family") {
    const BellmanSetup s = bellman_setup();
    SolverOptions opts;
    opts.max_iter = 30;
    auto g = grid(2, 1.0, 8.0, 0.125);
    const Solution a = policy_iteration(s.op, g, planted(s.data), opts);
    const Solution b = newton_solve(s.op, g, planted(s.data), opts);
    CHECK(b.report.converged);
    CHECK(max_diff(a.u, b.u) <= 10 * opts.tol);
  }
  SUBCASE("radial Pucci profile") {
    // (λ, Λ) = (1, 1.5), n = 3: u = r^{-1/3}.
    const double l = 1.0, L = 1.5;
    const PointFn prof = [&](const Point& x) { return pucci_radial_profile(l, L, 3, x); };
    std::vector<double> err;
    for (double h : {0.5, 0.25}) {
      const Solution sol = newton_solve(OperatorSpec::pucci_plus(l, L), grid(3, 1.0, 5.0, h), prof);
      CHECK(sol.report.converged);
      err.push_back(max_error(sol.u, prof));
    }
    CHECK(std::log2(err[0] / err[1]) >= 1.8);
  }
  SUBCASE("exact initial guess needs no iterations") {
    const PointFn zero = [](const Point&) { return 0.0; };
    const Solution sol = newton_solve(OperatorSpec::pucci_minus(1, 2), grid(2, 1.0, 6.0, 0.5), zero);
    CHECK(sol.report.iterations == 0);
    CHECK(sol.report.converged);
  }
  SolverOptions bad;
  bad.damping = 0.0;
  CHECK_THROWS_AS(newton_solve(OperatorSpec::pucci_plus(1, 2), grid(2, 1.0, 6.0, 0.5), planted(plant2d()), bad),
                  InvalidInput);
  CHECK_THROWS_AS(solve_dirichlet(OperatorSpec::linear(SymMatrix::identity(3)), grid(2, 1.0, 6.0, 0.5),
                                  planted(plant2d())),
                  InvalidInput);
}

TEST_CASE("solutions do not depend on the thread count") {
  const BellmanSetup s = bellman_setup();
  auto g = grid(2, 1.0, 8.0, 0.125);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const Solution a = policy_iteration(s.op, g, planted(s.data));
  const Solution an = newton_solve(OperatorSpec::pucci_plus(1, 2), g, planted(plant2d()));
  omp_set_num_threads(4);
  const Solution b = policy_iteration(s.op, g, planted(s.data));
  const Solution bn = newton_solve(OperatorSpec::pucci_plus(1, 2), g, planted(plant2d()));
  omp_set_num_threads(saved);
  CHECK(std::equal(a.u.values().begin(), a.u.values().end(), b.u.values().begin()));
  CHECK(std::equal(an.u.values().begin(), an.u.values().end(), bn.u.values().begin()));
  CHECK(a.report.residual_history == b.report.residual_history);
  CHECK(b.report.threads == 4);
}

TEST_CASE("expanding-domain probe") {
  SUBCASE("harmonic quadratic has no drift") {
    const PointFn q = [](const Point& x) { return 0.5 * (x(0) * x(0) - x(1) * x(1)) + 0.2 * x(0) - 1.0; };
    const auto levels = expanding_domain_probe(OperatorSpec::linear(SymMatrix::identity(2)), 2, 1.0, 0.25, q,
                                               {4.0, 6.0, 8.0});
    REQUIRE(levels.size() == 3);
    for (std::size_t k = 1; k < levels.size(); ++k) CHECK(levels[k].drift <= 1e-8);
    CHECK((levels.back().shell_hessian - SymMatrix::diagonal({1, -1})).max_abs_entry() <= 1e-8);
    // Normalized at the anchor.
    CHECK(std::abs(levels[0].normalized[levels[0].normalized.grid().anchor_node()]) <= 1e-12);
  }
  SUBCASE("quadratic plus decaying term in 3D") {
    const PointFn q = [](const Point& x) {
      return 0.5 * (x(0) * x(0) - x(2) * x(2)) + 2.0 / x.norm();
    };
    const auto levels = expanding_domain_probe(OperatorSpec::linear(SymMatrix::identity(3)), 3, 1.0, 0.5, q,
                                               {5.0, 6.5, 8.0, 10.0});
    // Shell averages of the decaying term's Hessian cancel by symmetry, so
    // the drift sits far below the R^{-n} envelope.
    for (std::size_t k = 1; k < levels.size(); ++k) CHECK(levels[k].drift <= std::pow(levels[k].radius, -3.0));
    CHECK((levels.back().shell_hessian - SymMatrix::diagonal({1, 0, -1})).max_abs_entry() <= 1e-6);
  }
  SUBCASE("Bellman family") {
    const BellmanSetup s = bellman_setup();
    const double h = 0.125;
    const auto levels = expanding_domain_probe(s.op, 2, 1.0, h, planted(s.data), {4.0, 8.0, 16.0});
    CHECK(levels[2].drift < levels[1].drift);
    CHECK(std::abs(evaluate(s.op, levels.back().shell_hessian)) <= 10 * h * h);
  }
  CHECK_THROWS_AS(expanding_domain_probe(OperatorSpec::linear(SymMatrix::identity(2)), 2, 1.0, 0.25,
                                         planted(plant2d()), {1.5, 4.0}),
                  InvalidInput);
  CHECK_THROWS_AS(expanding_domain_probe(OperatorSpec::linear(SymMatrix::identity(2)), 2, 1.0, 0.25,
                                         planted(plant2d()), {6.0, 4.0}),
                  InvalidInput);
}

TEST_CASE("solve report CSV") {
  const BellmanSetup s = bellman_setup();
  const Solution sol = policy_iteration(s.op, grid(2, 1.0, 6.0, 0.25), planted(s.data));
  std::ostringstream os;
  write_report_csv(os, sol.report);
  std::istringstream is(os.str());
  const CsvTable t = read_csv(is);
  CHECK(t.schema == "# schema: extasym.solve_report/v1");
  REQUIRE(t.rows.size() == sol.report.residual_history.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    CHECK(std::stod(t.rows[i][t.column("residual")]) == sol.report.residual_history[i]);
  CHECK(t.rows.back()[t.column("converged")] == "true");
}
