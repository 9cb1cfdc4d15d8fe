#include "extasym/config.hpp"
#include "extasym/csv.hpp"
#include "extasym/experiments.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace extasym;
namespace fs = std::filesystem;

namespace {

const char* kPlanted = R"(# small planted problem
[operator]
kind = linear
B = 1.5, 0.4, 0.8

[grid]
n = 2
r_in = 1
r_out = 6
h = 0.25

[boundary]
kind = planted
A = 1, 0.3, -0.5
b = 0.2, -0.1
c = 5
d = 3
e = 0.6, 0.4

[shells]
r_lo = 1.5
r_hi = 5.5
count = 5
)";

ExperimentConfig parse(const std::string& text, std::initializer_list<std::string> overrides = {}) {
  KeyValueConfig kv = KeyValueConfig::parse(text);
  for (const auto& o : overrides) kv.set(o);
  return build_config(kv);
}

int line_of_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

struct TempDir {
  TempDir() : path(fs::temp_directory_path() / ("extasym_harness_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path path;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + EXTASYM_CLI_PATH + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

CsvTable table(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return read_csv(is);
}

}  // namespace

TEST_CASE("configuration parsing") {
  const ExperimentConfig cfg = parse(kPlanted);
  CHECK(cfg.grid.n == 2);
  CHECK(cfg.grid.h == 0.25);
  CHECK(cfg.op.is_linear());
  CHECK(cfg.boundary.kind == BoundaryKind::Planted);
  CHECK(cfg.boundary.planted.c == 5);
  // A is projected onto the trace-free set of B.
  CHECK(std::abs(cfg.boundary.planted.B.frobenius_dot(cfg.boundary.planted.A)) <= 1e-14);
  const auto edges = cfg.shells.edges(cfg.grid);
  CHECK(edges.size() == 6);
  CHECK(edges.front() == 1.5);
  CHECK(edges.back() == doctest::Approx(5.5));

  const ExperimentConfig over = parse(kPlanted, {"grid.h=0.125", "boundary.d = 0"});
  CHECK(over.grid.h == 0.125);
  CHECK(over.boundary.planted.d == 0);
}

TEST_CASE("configuration errors carry line numbers") {
  CHECK(line_of_error("[grid]\nn = 2\nfoo = 1\n") == 3);
  CHECK(line_of_error("[grid]\nn = 2\nn = 3\n") == 3);
  CHECK(line_of_error("n = 2\n") == 1);
  CHECK(line_of_error("[grid\n") == 1);
  CHECK(line_of_error("[grid]\nh = abc\n") == 2);
  CHECK(line_of_error("[operator]\nkind = cubic\n") == 2);
  CHECK(line_of_error("# c\n\n[grid]\nn = 2\nr_in = 3\nr_out = 2\n") > 0);
  CHECK(line_of_error("[operator]\nkind = pucci_plus\nlambda = 2\nLambda = 1\n") > 0);
  CHECK(line_of_error(std::string(kPlanted) + "spacing = linear\n") == -1);
  KeyValueConfig kv = KeyValueConfig::parse(kPlanted);
  CHECK_THROWS_AS(kv.set("grid.bogus=1"), ConfigError);
  CHECK_THROWS_AS(kv.set("grid.h"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("boundary kinds") {
  const ExperimentConfig q = parse(kPlanted, {"boundary.kind=quadratic"});
  REQUIRE(exact_solution(q).has_value());
  CHECK(q.boundary.planted.d == 0);
  const Point x = make_point({2, 1});
  CHECK((*exact_solution(q))(x) == boundary_function(q)(x));

  const ExperimentConfig z = parse(kPlanted, {"boundary.kind=zero"});
  CHECK(boundary_function(z)(x) == 0.0);

  CHECK_THROWS_AS(parse(kPlanted, {"boundary.kind=pucci_radial"}), ConfigError);
  const ExperimentConfig pr = parse(
      "[operator]\nkind = pucci_plus\nlambda = 1\nLambda = 1.5\n[grid]\nn = 3\nr_in = 1\nr_out = 5\nh = 0.5\n"
      "[boundary]\nkind = pucci_radial\n");
  REQUIRE(exact_solution(pr).has_value());
  const Point y = make_point({2, 0, 0});
  CHECK((*exact_solution(pr))(y) == doctest::Approx(pucci_radial_profile(1, 1.5, 3, y)));
}

TEST_CASE("planted recovery through the library") {
  const RecoveryResult r = recover_planted(parse(kPlanted, {"grid.h=0.125", "grid.r_out=8", "shells.r_hi=7.5"}));
  CHECK(r.pass);
  int gated = 0;
  for (const auto& row : r.rows) {
    if (!row.gated) continue;
    ++gated;
    CHECK(row.error <= row.tolerance);
  }
  CHECK(gated == 3);
  CHECK_THROWS_AS(recover_planted(parse(kPlanted, {"operator.kind=pucci_plus", "operator.lambda=1",
                                                   "operator.Lambda=2", "boundary.B=1,0,1"})),
                  InvalidInput);
}

TEST_CASE("convergence table") {
  SUBCASE("quadratic data is reproduced exactly") {
    const ConvergenceResult c = run_convergence(parse(kPlanted, {"boundary.kind=quadratic", "grid.h=0.5"}));
    REQUIRE(c.complete);
    REQUIRE(c.rows.size() == 6);
    for (const auto& row : c.rows) {
      CHECK(row.exact);
      CHECK_FALSE(row.order.has_value());
    }
  }
  SUBCASE("planted data converges at second order") {
    const ConvergenceResult c = run_convergence(parse(kPlanted));
    REQUIRE(c.complete);
    for (const auto& row : c.rows)
      if (row.quantity == "max_error" && row.order) CHECK(*row.order >= 1.8);
  }
  SUBCASE("too few levels") { CHECK_THROWS_AS(parse(kPlanted, {"run.levels=2"}), ConfigError); }
}

TEST_CASE("CLI runs, exit codes and determinism") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "planted.cfg";
  std::ofstream(cfg) << kPlanted;
  const std::string c = "-c " + cfg.string();

  CHECK(run_cli("plant-and-recover " + c + " -o " + (tmp.path / "a").string()) == 0);
  CHECK(run_cli("plant-and-recover " + c + " -o " + (tmp.path / "b").string(), "OMP_NUM_THREADS=3") == 0);
  for (const char* f : {"recovery.csv", "fit.csv", "shells.csv", "solve_report.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(tmp.path / "a" / f));
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  }
  CHECK(fs::exists(tmp.path / "a" / "timing.txt"));
  CHECK(slurp(tmp.path / "a" / "recovery.csv").rfind("# schema: extasym.recovery/v", 0) == 0);

  // Relative output directories go below $EXTASYM_OUTPUT_ROOT.
  CHECK(run_cli("solve " + c + " -o rel --svg", "EXTASYM_OUTPUT_ROOT=" + tmp.path.string()) == 0);
  REQUIRE(fs::exists(tmp.path / "rel" / "field.csv"));
  const CsvTable field = table(tmp.path / "rel" / "field.csv");
  CHECK(field.rows.size() > 100);

  CHECK(run_cli("verify " + c + " -o " + (tmp.path / "v").string()) == 0);
  const CsvTable v = table(tmp.path / "v" / "verify.csv");
  for (const auto& row : v.rows) CHECK(row[v.column("pass")] == "true");

  CHECK(run_cli("convergence " + c + " --levels 3 --svg -s grid.h=0.5 -o " + (tmp.path / "a").string()) == 0);
  CHECK(fs::exists(tmp.path / "a" / "convergence.svg"));
  CHECK(run_cli("report --svg " + (tmp.path / "a").string()) == 0);
  const CsvTable rep = table(tmp.path / "a" / "report.csv");
  CHECK(rep.rows.size() >= 5);

  CHECK(run_cli("solve -c " + (tmp.path / "missing.cfg").string()) == 1);
  CHECK(run_cli("solve " + c + " -s grid.bogus=1") == 1);
  CHECK(run_cli("convergence " + c + " --levels 2 -o " + (tmp.path / "x").string()) == 1);
  // A tolerance no solve can meet is a recovery failure.
  CHECK(run_cli("plant-and-recover " + c + " -s run.recovery_tolerance=1e-9 -o " + (tmp.path / "f").string()) == 3);
  CHECK(run_cli("solve " + c + " -s solver.method=policy -s operator.kind=bellman_max -s operator.members=1 "
                "-s solver.max_iter=0 -o " +
                (tmp.path / "g").string()) != 0);
  CHECK(run_cli("report " + (tmp.path / "nowhere").string()) != 0);
}
