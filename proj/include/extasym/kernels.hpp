#pragma once

#include "extasym/grid.hpp"
#include "extasym/operators.hpp"

#include <vector>

namespace extasym {

/// Node-parallel kernels. Every kernel writes one output slot per interior
/// node and performs no cross-node reduction, so the OpenMP and serial
/// variants are bit-identical by construction. The serial path is the
/// reference the tests compare against.
enum class Exec { Serial, Parallel };

/// hessian_at for every interior node, indexed by interior slot.
std::vector<SymMatrix> hessian_field(const Field& f, Exec exec = Exec::Parallel);

/// evaluate(op, hessian_at(f, node)) for every interior node. Throws naming
/// the first (lexicographic) node whose Hessian is not finite.
std::vector<double> assemble_residual(const OperatorSpec& op, const Field& f, Exec exec = Exec::Parallel);

/// gradient(op, hessian_at(f, node)) for every interior node.
std::vector<SymMatrix> gradient_field(const OperatorSpec& op, const Field& f, Exec exec = Exec::Parallel);

/// Bellman argmax index for every interior node.
std::vector<int> policy_field(const BellmanMaxOp& op, const Field& f, Exec exec = Exec::Parallel);

/// Max |v|, exact (max is order independent).
double max_abs(std::span<const double> v);

/// OpenMP thread count the parallel kernels use (1 without OpenMP).
int kernel_threads();

}  // namespace extasym
