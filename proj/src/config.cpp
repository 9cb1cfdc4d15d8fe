#include "extasym/config.hpp"

#include "extasym/asymptotics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace extasym {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k{
        "operator.kind", "operator.B",      "operator.lambda", "operator.Lambda", "operator.members",
        "grid.n",        "grid.r_in",       "grid.r_out",      "grid.h",          "boundary.kind",
        "boundary.B",    "boundary.A",      "boundary.b",      "boundary.c",      "boundary.d",
        "boundary.e",    "boundary.project_A", "solver.method", "solver.tol",     "solver.max_iter",
        "solver.damping", "solver.linear",  "solver.linear_tol", "shells.r_lo",   "shells.r_hi",
        "shells.count",  "shells.spacing",  "output.dir",      "output.svg",      "run.seed",
        "run.levels",    "run.recovery_tolerance", "verify.eps0", "verify.alphas", "verify.trials"};
    for (int m = 1; m <= 8; ++m) {
      k.insert("operator.B" + std::to_string(m));
      k.insert("operator.c" + std::to_string(m));
    }
    return k;
  }();
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& s, const std::string& key, int line) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("'" + key + "': expected a number, got '" + t + "'", line);
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line);
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    if (section.empty()) throw ConfigError("key outside of any [section]", line);
    const std::string key = section + "." + trim(s.substr(0, eq));
    if (!known_keys().contains(key)) throw ConfigError("unknown key '" + key + "'", line);
    if (cfg.values_.contains(key)) throw ConfigError("duplicate key '" + key + "'", line);
    cfg.values_[key] = {trim(s.substr(eq + 1)), line};
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like section.key=value", 0);
  const std::string key = trim(assignment.substr(0, eq));
  if (!known_keys().contains(key)) throw ConfigError("unknown key '" + key + "' in override", 0);
  values_[key] = {trim(assignment.substr(eq + 1)), 0};
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second.value;
}

int KeyValueConfig::line_of(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? 0 : it->second.line;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second.value, key, it->second.line);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const double v = parse_double(it->second.value, key, it->second.line);
  if (v != static_cast<double>(static_cast<long>(v)))
    throw ConfigError("'" + key + "': expected an integer", it->second.line);
  return static_cast<int>(v);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second.value;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected true/false", it->second.line);
}

std::vector<double> KeyValueConfig::get_list(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return {};
  std::string s = it->second.value;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_double(tok, key, it->second.line));
  return out;
}

std::vector<double> ShellSpec::edges(const GridSpec& g) const {
  const double lo = r_lo > 0.0 ? r_lo : g.r_in + 2.0 * g.h;
  const double hi = r_hi > 0.0 ? r_hi : g.r_out - g.h;
  return log_spacing ? log_shell_edges(lo, hi, count) : linear_shell_edges(lo, hi, count);
}

namespace {

SymMatrix matrix_from(const KeyValueConfig& kv, const std::string& key, int n) {
  const std::vector<double> v = kv.get_list(key);
  if (v.size() != static_cast<std::size_t>(n * (n + 1) / 2))
    throw ConfigError("'" + key + "': expected " + std::to_string(n * (n + 1) / 2) +
                          " upper-triangle entries for n = " + std::to_string(n),
                      kv.line_of(key));
  SymMatrix M(n);
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) M.set(i, j, v[k++]);
  return M;
}

Point vector_from(const KeyValueConfig& kv, const std::string& key, int n) {
  if (!kv.has(key)) return Point::Zero(n);
  const std::vector<double> v = kv.get_list(key);
  if (v.size() != static_cast<std::size_t>(n))
    throw ConfigError("'" + key + "': expected " + std::to_string(n) + " entries", kv.line_of(key));
  Point p(n);
  for (int i = 0; i < n; ++i) p(i) = v[i];
  return p;
}

// Re-throws library validation errors against the line that triggered them.
template <class F>
auto at_line(const KeyValueConfig& kv, const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("'") + key + "': " + e.what(), kv.line_of(key));
  }
}

OperatorSpec build_operator(const KeyValueConfig& kv, int n) {
  const std::string kind = kv.get("operator.kind", "linear");
  if (kind == "linear") {
    const SymMatrix B = kv.has("operator.B") ? matrix_from(kv, "operator.B", n) : SymMatrix::identity(n);
    return at_line(kv, "operator.B", [&] { return OperatorSpec::linear(B); });
  }
  if (kind == "bellman_max") {
    const int members = kv.get_int("operator.members", 0);
    if (members < 1 || members > 8)
      throw ConfigError("'operator.members' must be between 1 and 8", kv.line_of("operator.members"));
    std::vector<BellmanMember> fam;
    for (int m = 1; m <= members; ++m) {
      const std::string bk = "operator.B" + std::to_string(m);
      if (!kv.has(bk)) throw ConfigError("missing '" + bk + "'", kv.line_of("operator.members"));
      fam.push_back({matrix_from(kv, bk, n), kv.get_double("operator.c" + std::to_string(m), 0.0)});
    }
    return at_line(kv, "operator.members", [&] {
      if (kv.has("operator.lambda") || kv.has("operator.Lambda"))
        return OperatorSpec::bellman_max(fam, kv.get_double("operator.lambda", 0.0),
                                         kv.get_double("operator.Lambda", 0.0));
      return OperatorSpec::bellman_max(fam);
    });
  }
  if (kind == "pucci_plus" || kind == "pucci_minus") {
    const double l = kv.get_double("operator.lambda", 1.0), L = kv.get_double("operator.Lambda", 1.0);
    return at_line(kv, "operator.lambda", [&] {
      return kind == "pucci_plus" ? OperatorSpec::pucci_plus(l, L) : OperatorSpec::pucci_minus(l, L);
    });
  }
  throw ConfigError("'operator.kind': unknown operator '" + kind + "'", kv.line_of("operator.kind"));
}

}  // namespace

ExperimentConfig build_config(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  GridSpec& g = cfg.grid;
  g.n = kv.get_int("grid.n", 2);
  if (g.n != 2 && g.n != 3) throw ConfigError("'grid.n' must be 2 or 3", kv.line_of("grid.n"));
  g.r_in = kv.get_double("grid.r_in", 1.0);
  g.r_out = kv.get_double("grid.r_out", 8.0);
  g.h = kv.get_double("grid.h", 0.25);
  // Report a bad grid at the last grid key given.
  std::string grid_key = "grid.h";
  for (const char* k : {"grid.n", "grid.r_in", "grid.r_out", "grid.h"})
    if (kv.has(k) && kv.line_of(k) > kv.line_of(grid_key)) grid_key = k;
  at_line(kv, grid_key, [&] { return AnnulusGrid(g.n, g.r_in, g.r_out, g.h).node_count(); });

  cfg.op = build_operator(kv, g.n);

  const std::string bkind = kv.get("boundary.kind", "planted");
  BoundarySpec& b = cfg.boundary;
  if (bkind == "planted")
    b.kind = BoundaryKind::Planted;
  else if (bkind == "quadratic")
    b.kind = BoundaryKind::Quadratic;
  else if (bkind == "pucci_radial")
    b.kind = BoundaryKind::PucciRadial;
  else if (bkind == "zero")
    b.kind = BoundaryKind::Zero;
  else
    throw ConfigError("'boundary.kind': unknown boundary data '" + bkind + "'", kv.line_of("boundary.kind"));

  PlantedExpansion& p = b.planted;
  p.n = g.n;
  if (kv.has("boundary.B")) {
    p.B = matrix_from(kv, "boundary.B", g.n);
  } else if (cfg.op.is_linear()) {
    p.B = std::get<LinearOp>(cfg.op.kind()).B;
  } else if (cfg.op.is_bellman()) {
    p.B = cfg.op.bellman().family.front().B;
  } else {
    p.B = SymMatrix::identity(g.n);
  }
  p.A = kv.has("boundary.A") ? matrix_from(kv, "boundary.A", g.n) : SymMatrix(g.n);
  if (kv.get_bool("boundary.project_A", true)) p.A = make_trace_free(p.A, p.B);
  p.b = vector_from(kv, "boundary.b", g.n);
  p.c = kv.get_double("boundary.c", 0.0);
  p.d = kv.get_double("boundary.d", 0.0);
  p.e = vector_from(kv, "boundary.e", g.n);
  if (b.kind == BoundaryKind::Quadratic) {
    p.d = 0.0;
    p.e = Point::Zero(g.n);
  }
  if (b.kind == BoundaryKind::Planted || b.kind == BoundaryKind::Quadratic)
    at_line(kv, "boundary.kind", [&] {
      p.validate();
      return 0;
    });
  if (b.kind == BoundaryKind::PucciRadial && !(cfg.op.name() == "pucci_plus"))
    throw ConfigError("'boundary.kind = pucci_radial' requires operator.kind = pucci_plus",
                      kv.line_of("boundary.kind"));

  const std::string method = kv.get("solver.method", "auto");
  if (method == "auto")
    cfg.method = SolverMethod::Auto;
  else if (method == "linear")
    cfg.method = SolverMethod::Linear;
  else if (method == "policy")
    cfg.method = SolverMethod::Policy;
  else if (method == "newton")
    cfg.method = SolverMethod::Newton;
  else
    throw ConfigError("'solver.method': unknown method '" + method + "'", kv.line_of("solver.method"));
  if (cfg.method == SolverMethod::Linear && !cfg.op.is_linear())
    throw ConfigError("'solver.method = linear' requires a linear operator", kv.line_of("solver.method"));
  if (cfg.method == SolverMethod::Policy && !cfg.op.is_bellman())
    throw ConfigError("'solver.method = policy' requires a bellman_max operator", kv.line_of("solver.method"));

  cfg.solver.tol = kv.get_double("solver.tol", 1e-9);
  if (!(cfg.solver.tol > 0.0)) throw ConfigError("'solver.tol' must be positive", kv.line_of("solver.tol"));
  cfg.solver.max_iter = kv.get_int("solver.max_iter", 50);
  if (cfg.solver.max_iter < 1) throw ConfigError("'solver.max_iter' must be >= 1", kv.line_of("solver.max_iter"));
  cfg.solver.damping = kv.get_double("solver.damping", 1.0);
  if (!(cfg.solver.damping > 0.0 && cfg.solver.damping <= 1.0))
    throw ConfigError("'solver.damping' must lie in (0, 1]", kv.line_of("solver.damping"));
  cfg.solver.linear_tol = kv.get_double("solver.linear_tol", 1e-10);
  if (!(cfg.solver.linear_tol > 0.0))
    throw ConfigError("'solver.linear_tol' must be positive", kv.line_of("solver.linear_tol"));
  const std::string lin = kv.get("solver.linear", "auto");
  if (lin == "auto")
    cfg.solver.linear = LinearSolverKind::Auto;
  else if (lin == "sparse_lu")
    cfg.solver.linear = LinearSolverKind::SparseLU;
  else if (lin == "bicgstab")
    cfg.solver.linear = LinearSolverKind::BiCGSTAB;
  else
    throw ConfigError("'solver.linear': unknown linear solver '" + lin + "'", kv.line_of("solver.linear"));

  cfg.shells.r_lo = kv.get_double("shells.r_lo", 0.0);
  cfg.shells.r_hi = kv.get_double("shells.r_hi", 0.0);
  cfg.shells.count = kv.get_int("shells.count", 8);
  const std::string spacing = kv.get("shells.spacing", "log");
  if (spacing != "log" && spacing != "linear")
    throw ConfigError("'shells.spacing' must be log or linear", kv.line_of("shells.spacing"));
  cfg.shells.log_spacing = spacing == "log";
  {
    const std::vector<double> e = at_line(kv, "shells.count", [&] { return cfg.shells.edges(g); });
    if (e.front() <= g.r_in || e.back() >= g.r_out)
      throw ConfigError("shell radii must lie inside (r_in, r_out)", kv.line_of("shells.r_lo"));
  }

  cfg.output_dir = kv.get("output.dir", "out");
  cfg.svg = kv.get_bool("output.svg", false);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("run.seed", 1));
  cfg.levels = kv.get_int("run.levels", 3);
  if (cfg.levels < 3) throw ConfigError("'run.levels' must be at least 3", kv.line_of("run.levels"));
  cfg.recovery_tolerance = kv.get_double("run.recovery_tolerance", 0.02);
  if (!(cfg.recovery_tolerance > 0.0))
    throw ConfigError("'run.recovery_tolerance' must be positive", kv.line_of("run.recovery_tolerance"));
  cfg.certificate_eps0 = kv.get_double("verify.eps0", 0.5);
  if (kv.has("verify.alphas")) cfg.certificate_alphas = kv.get_list("verify.alphas");
  cfg.probe_trials = kv.get_int("verify.trials", 2000);
  return cfg;
}

std::optional<PointFn> exact_solution(const ExperimentConfig& cfg) {
  switch (cfg.boundary.kind) {
    case BoundaryKind::Planted:
      if (!cfg.op.is_linear()) return std::nullopt;
      [[fallthrough]];
    case BoundaryKind::Quadratic: {
      const PlantedExpansion p = cfg.boundary.planted;
      return PointFn([p](const Point& x) { return planted_value(p, x); });
    }
    case BoundaryKind::PucciRadial: {
      const double l = cfg.op.lambda(), L = cfg.op.Lambda();
      const int n = cfg.grid.n;
      if (!((n - 1) * l / L > 1.0)) return std::nullopt;
      return PointFn([l, L, n](const Point& x) { return pucci_radial_profile(l, L, n, x); });
    }
    case BoundaryKind::Zero: return PointFn([](const Point&) { return 0.0; });
  }
  return std::nullopt;
}

PointFn boundary_function(const ExperimentConfig& cfg) {
  switch (cfg.boundary.kind) {
    case BoundaryKind::Planted:
    case BoundaryKind::Quadratic: {
      const PlantedExpansion p = cfg.boundary.planted;
      return [p](const Point& x) { return planted_value(p, x); };
    }
    case BoundaryKind::PucciRadial: {
      const double l = cfg.op.lambda(), L = cfg.op.Lambda();
      const int n = cfg.grid.n;
      return [l, L, n](const Point& x) { return pucci_radial_profile(l, L, n, x); };
    }
    case BoundaryKind::Zero: break;
  }
  return [](const Point&) { return 0.0; };
}

}  // namespace extasym
