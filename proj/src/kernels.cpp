#include "extasym/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace extasym {

namespace {

template <class Body>
void for_each_slot(std::int64_t count, Exec exec, Body&& body) {
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < count; ++s) body(static_cast<std::size_t>(s));
  } else {
    for (std::int64_t s = 0; s < count; ++s) body(static_cast<std::size_t>(s));
  }
}

// Exceptions must not escape an OpenMP region, so mismatches are caught here.
void check_dim(const OperatorSpec& op, const AnnulusGrid& g) {
  if (op.dim() != 0 && op.dim() != g.dim())
    throw InvalidInput("operator of dimension " + std::to_string(op.dim()) + " applied on a " +
                       std::to_string(g.dim()) + "D grid");
}

std::string coord_string(const Point& x) {
  std::string out = "(";
  for (int i = 0; i < x.size(); ++i) out += (i ? ", " : "") + std::to_string(x(i));
  return out + ")";
}

}  // namespace

std::vector<SymMatrix> hessian_field(const Field& f, Exec exec) {
  const AnnulusGrid& g = f.grid();
  const auto interior = g.interior();
  std::vector<SymMatrix> out(interior.size());
  for_each_slot(static_cast<std::int64_t>(interior.size()), exec,
                [&](std::size_t s) { out[s] = hessian_at(f, interior[s]); });
  return out;
}

std::vector<double> assemble_residual(const OperatorSpec& op, const Field& f, Exec exec) {
  const AnnulusGrid& g = f.grid();
  const auto interior = g.interior();
  check_dim(op, g);
  std::vector<double> out(interior.size());
  for_each_slot(static_cast<std::int64_t>(interior.size()), exec, [&](std::size_t s) {
    const SymMatrix H = hessian_at(f, interior[s]);
    out[s] = H.all_finite() ? evaluate(op, H) : std::numeric_limits<double>::quiet_NaN();
  });
  for (std::size_t s = 0; s < out.size(); ++s)
    if (!std::isfinite(out[s]))
      throw Error("assemble_residual: non-finite Hessian at node " + std::to_string(interior[s]) + " " +
                  coord_string(g.coord(interior[s])));
  return out;
}

std::vector<SymMatrix> gradient_field(const OperatorSpec& op, const Field& f, Exec exec) {
  const AnnulusGrid& g = f.grid();
  const auto interior = g.interior();
  check_dim(op, g);
  std::vector<SymMatrix> out(interior.size());
  for_each_slot(static_cast<std::int64_t>(interior.size()), exec,
                [&](std::size_t s) { out[s] = gradient(op, hessian_at(f, interior[s])); });
  return out;
}

std::vector<int> policy_field(const BellmanMaxOp& op, const Field& f, Exec exec) {
  const AnnulusGrid& g = f.grid();
  const auto interior = g.interior();
  for (const BellmanMember& m : op.family)
    if (m.B.dim() != g.dim()) throw InvalidInput("policy_field: Bellman member dimension does not match the grid");
  std::vector<int> out(interior.size());
  for_each_slot(static_cast<std::int64_t>(interior.size()), exec,
                [&](std::size_t s) { out[s] = bellman_argmax(op, hessian_at(f, interior[s])); });
  return out;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

int kernel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace extasym
