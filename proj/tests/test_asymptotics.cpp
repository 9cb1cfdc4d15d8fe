#include "extasym/asymptotics.hpp"
#include "extasym/csv.hpp"
#include "extasym/exact_solutions.hpp"
#include "extasym/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace extasym;

namespace {

PlantedExpansion plant2d() {
  PlantedExpansion p;
  p.n = 2;
  p.B = SymMatrix::from_upper(2, {1.5, 0.4, 0.8});
  p.A = make_trace_free(SymMatrix::from_upper(2, {1.0, 0.3, -0.5}), p.B);
  p.b = make_point({0.2, -0.1});
  p.c = 5;
  p.d = 3;
  p.e = make_point({0.6, 0.4});
  return p;
}

PlantedExpansion plant3d() {
  PlantedExpansion p;
  p.n = 3;
  p.B = SymMatrix::from_upper(3, {1.6, 0.3, -0.2, 1.0, 0.1, 0.7});
  p.A = make_trace_free(SymMatrix::from_upper(3, {1.0, 0.2, 0.0, -0.4, 0.3, 0.5}), p.B);
  p.b = make_point({0.3, -0.2, 0.1});
  p.c = 2;
  p.d = 1.5;
  p.e = make_point({0.8, -0.5, 0.3});
  return p;
}

Field sampled(const PlantedExpansion& p, double r_out, double h) {
  auto g = std::make_shared<const AnnulusGrid>(p.n, 1.0, r_out, h);
  return sample(g, [p](const Point& x) { return planted_value(p, x); });
}

}  // namespace

TEST_CASE("shell edges") {
  const auto e = log_shell_edges(1.0, 8.0, 3);
  REQUIRE(e.size() == 4);
  CHECK(e[0] == 1.0);
  CHECK(e[1] == doctest::Approx(2.0));
  CHECK(e[2] == doctest::Approx(4.0));
  CHECK(e[3] == 8.0);
  const auto l = linear_shell_edges(2.0, 5.0, 3);
  CHECK(l == std::vector<double>{2.0, 3.0, 4.0, 5.0});
  CHECK_THROWS_AS(log_shell_edges(0.0, 8.0, 3), InvalidInput);
  CHECK_THROWS_AS(log_shell_edges(2.0, 1.0, 3), InvalidInput);
  CHECK_THROWS_AS(linear_shell_edges(1.0, 2.0, 0), InvalidInput);
}

TEST_CASE("fit recovers a sampled expansion") {
  for (const PlantedExpansion& p : {plant2d(), plant3d()}) {
    const double r_out = p.n == 2 ? 12.0 : 8.0, h = p.n == 2 ? 0.125 : 0.25;
    const Field u = sampled(p, r_out, h);
    const auto edges = log_shell_edges(2.0, r_out - h, 6);
    const ExpansionFit fit = fit_expansion(OperatorSpec::linear(p.B), u, edges);
    CHECK((fit.A - p.A).max_abs_entry() <= 1e-6);
    CHECK((fit.b - p.b).norm() <= 1e-6);
    CHECK(fit.c == doctest::Approx(p.c).epsilon(1e-6));
    CHECK(fit.d == doctest::Approx(p.d).epsilon(1e-6));
    CHECK((fit.e - p.e).norm() <= 1e-5 * p.e.norm());
    CHECK(fit.weighted_rms <= 1e-8);
    CHECK(std::abs(fit.F_at_A) <= 1e-6);
    Point x = Point::Zero(p.n);
    x(0) = 3;
    x(1) = 1;
    CHECK(std::abs(fit.value(x) - planted_value(p, x)) <= 1e-6);
    CHECK(fit.shell_diagnostics.size() == 6);
  }
}

TEST_CASE("fit of a discrete solution") {
  const PlantedExpansion p = plant2d();
  auto g = std::make_shared<const AnnulusGrid>(2, 1.0, 8.0, 0.125);
  const Solution sol = linear_solve(p.B, g, [p](const Point& x) { return planted_value(p, x); });
  const auto edges = log_shell_edges(2.0, 7.0, 6);
  const ExpansionFit fit = fit_expansion(OperatorSpec::linear(p.B), sol.u, edges);
  CHECK(fit.d == doctest::Approx(p.d).epsilon(0.01));
  CHECK(fit.c == doctest::Approx(p.c).epsilon(0.01));
  CHECK((fit.e - p.e).norm() <= 0.02 * p.e.norm());

  SUBCASE("the wrong metric fits worse") {
    FitOptions opts;
    opts.metric_override = SymMatrix::identity(2);
    const ExpansionFit wrong = fit_expansion(OperatorSpec::linear(p.B), sol.u, edges, opts);
    CHECK(wrong.weighted_rms > 10 * fit.weighted_rms);
  }
  SUBCASE("dropping the tail fits worse") {
    FitOptions opts;
    opts.include_tail = false;
    const ExpansionFit no_tail = fit_expansion(OperatorSpec::linear(p.B), sol.u, edges, opts);
    CHECK(no_tail.weighted_rms > 10 * fit.weighted_rms);
    CHECK(no_tail.e.norm() == 0.0);
  }
}

TEST_CASE("residual and Hessian decay rates") {
  for (const PlantedExpansion& base : {plant2d(), plant3d()}) {
    const int n = base.n;
    const double r_out = n == 2 ? 24.0 : 10.0, h = n == 2 ? 0.25 : 0.5;
    const Field u = sampled(base, r_out, h);
    const auto edges = log_shell_edges(3.0, r_out - h, 5);
    const ExpansionFit fit = fit_expansion(OperatorSpec::linear(base.B), u, edges);
    // Without the tail the remainder is the tail itself, ~ r^{1−n}.
    const DecayFit without = expansion_residual_decay(fit, u, edges, false);
    REQUIRE(without.applicable);
    CHECK(without.exponent == doctest::Approx(1.0 - n).epsilon(0.3 / (n - 1)));
    const DecayFit with = expansion_residual_decay(fit, u, edges, true);
    for (std::size_t k = 0; k < with.shells.size(); ++k) CHECK(with.shells[k].value <= 1e-9);

    // Hessian of the tail alone: ~ r^{−n−1}.
    PlantedExpansion p = base;
    p.d = 0;
    const DecayFit hd = hessian_decay_probe(sampled(p, r_out, h), p.A, edges);
    REQUIRE(hd.applicable);
    CHECK(std::abs(hd.exponent + (n + 1)) <= 0.3);
  }
  const Field u = sampled(plant2d(), 8.0, 0.25);
  CHECK_THROWS_AS(hessian_decay_probe(u, plant2d().A, {2.0, 3.0, 4.0}), InvalidInput);
}

TEST_CASE("Hessian probe excludes exact shells") {
  PlantedExpansion p = plant2d();
  p.d = 0;
  p.e = Point::Zero(2);
  const DecayFit hd = hessian_decay_probe(sampled(p, 6.0, 0.5), p.A, {2.0, 3.0, 4.0, 5.0});
  CHECK_FALSE(hd.applicable);
  for (const auto& s : hd.shells) CHECK(s.excluded);
}

TEST_CASE("fit failures are reported") {
  SUBCASE("rank-deficient design") {
    // Every node of this shell sits on |x| = 5, where Γ is constant.
    auto g = std::make_shared<const AnnulusGrid>(2, 1.0, 10.0, 1.0);
    const Field u = sample(g, [](const Point& x) { return x(0); });
    try {
      fit_expansion(OperatorSpec::linear(SymMatrix::identity(2)), u, {4.99, 5.01});
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("rank-deficient") != std::string::npos);
    }
  }
  SUBCASE("too few nodes in the outer shell") {
    const Field u = sampled(plant2d(), 8.0, 0.5);
    CHECK_THROWS_AS(estimate_A(u, {2.0, 2.01}), InvalidInput);
  }
  SUBCASE("bad edges") {
    const Field u = sampled(plant2d(), 8.0, 0.5);
    CHECK_THROWS_AS(fit_expansion(OperatorSpec::linear(plant2d().B), u, {3.0, 2.0}), InvalidInput);
    CHECK_THROWS_AS(fit_expansion(OperatorSpec::linear(plant2d().B), u, {3.0}), InvalidInput);
  }
}

TEST_CASE("Kelvin transform") {
  const ScalarFn one = [](const Point&) { return 1.0; };
  CHECK(kelvin_transform(one, make_point({0, 2, 0}), 3) == doctest::Approx(0.5));
  CHECK(kelvin_transform(one, make_point({0, 2}), 2) == 1.0);
  const ScalarFn x1 = [](const Point& y) { return y(0); };
  // K[x₁] = x₁/|x|ⁿ.
  CHECK(kelvin_transform(x1, make_point({1, 1, 1}), 3) == doctest::Approx(1.0 / std::pow(3.0, 1.5)));
  CHECK_THROWS_AS(kelvin_transform(one, make_point({0, 0}), 2), DomainError);
  CHECK_THROWS_AS(kelvin_transform(one, make_point({1, 0}), 3), InvalidInput);

  for (int n : {2, 3}) {
    const ScalarFn E = [](const Point& y) {
      double s = std::sin(y(0)) + y(1) * y(1) * y(0);
      if (y.size() == 3) s += std::exp(0.3 * y(2));
      return s;
    };
    const std::vector<double> radii{0.8, 1.25, 2.0};
    const auto samples = sphere_samples(n, radii, 12);
    std::vector<double> dev;
    for (double step : {0.02, 0.01, 0.005}) dev.push_back(kelvin_identity_check(E, samples, step).max_deviation);
    CHECK(std::log2(dev[0] / dev[1]) >= 1.8);
    CHECK(std::log2(dev[1] / dev[2]) >= 1.8);
    CHECK(kelvin_involution_error(E, samples) <= 1e-12);
  }

  // A harmonic function maps to a harmonic function.
  const ScalarFn harm = [](const Point& y) { return y(0) * y(0) - y(1) * y(1) + 3 * y(0) * y(1); };
  const std::vector<double> radii{1.0, 1.5};
  const auto samples = sphere_samples(2, radii, 8);
  const KelvinCheck coarse = kelvin_identity_check(harm, samples, 0.02);
  const KelvinCheck fine = kelvin_identity_check(harm, samples, 0.01);
  CHECK(std::log2(coarse.max_lhs / fine.max_lhs) >= 1.8);
  CHECK(fine.max_rhs <= 1e-9);

  const std::vector<Point> near{make_point({0.01, 0.0})};
  CHECK_THROWS_AS(kelvin_identity_check(harm, near, 0.01), InvalidInput);
  CHECK_THROWS_AS(kelvin_identity_check(harm, samples, 0.0), InvalidInput);
}

TEST_CASE("fit and shell CSVs") {
  const PlantedExpansion p = plant2d();
  const Field u = sampled(p, 8.0, 0.25);
  const ExpansionFit fit = fit_expansion(OperatorSpec::linear(p.B), u, log_shell_edges(2.0, 7.5, 4));
  std::ostringstream f, s;
  write_fit_csv(f, fit);
  write_shell_csv(s, fit);
  std::istringstream fi(f.str()), si(s.str());
  const CsvTable ft = read_csv(fi), st = read_csv(si);
  REQUIRE(ft.rows.size() == 1);
  CHECK(std::stod(ft.rows[0][ft.column("d")]) == fit.d);
  CHECK(std::stod(ft.rows[0][ft.column("A12")]) == fit.A(0, 1));
  CHECK(ft.schema.find("expansion_fit") != std::string::npos);
  REQUIRE(st.rows.size() == 4);
  CHECK(std::stoul(st.rows[2][st.column("count")]) == fit.shell_diagnostics[2].count);
}
