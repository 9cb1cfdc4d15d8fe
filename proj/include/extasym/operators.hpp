#pragma once

#include "extasym/sym_matrix.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace extasym {

/// F(M) = tr(B M).
struct LinearOp {
  SymMatrix B;
};

struct BellmanMember {
  SymMatrix B;
  double c = 0.0;
};

/// F(M) = max_k tr(B_k M) + c_k. Convex by construction.
struct BellmanMaxOp {
  std::vector<BellmanMember> family;
};

/// Maximal Pucci operator: Λ Σ μ⁺ − λ Σ μ⁻ over the eigenvalues μ of M.
struct PucciPlusOp {};
/// Minimal Pucci operator: λ Σ μ⁺ − Λ Σ μ⁻.
struct PucciMinusOp {};

/// A fully nonlinear operator F together with its ellipticity band [λ, Λ].
/// Construct through the factory functions; they validate the band.
class OperatorSpec {
public:
  using Kind = std::variant<LinearOp, BellmanMaxOp, PucciPlusOp, PucciMinusOp>;

  static OperatorSpec linear(SymMatrix B);
  /// Band defaults to the hull of the members' spectra.
  static OperatorSpec bellman_max(std::vector<BellmanMember> family);
  static OperatorSpec bellman_max(std::vector<BellmanMember> family, double lambda, double Lambda);
  static OperatorSpec pucci_plus(double lambda, double Lambda);
  static OperatorSpec pucci_minus(double lambda, double Lambda);

  const Kind& kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }
  /// 0 for the dimension-free Pucci operators.
  int dim() const { return dim_; }
  bool is_bellman() const { return std::holds_alternative<BellmanMaxOp>(kind_); }
  bool is_linear() const { return std::holds_alternative<LinearOp>(kind_); }
  const BellmanMaxOp& bellman() const { return std::get<BellmanMaxOp>(kind_); }
  std::string name() const;

private:
  OperatorSpec(Kind k, double lambda, double Lambda, int dim)
      : kind_(std::move(k)), lambda_(lambda), Lambda_(Lambda), dim_(dim) {}

  Kind kind_;
  double lambda_ = 1.0;
  double Lambda_ = 1.0;
  int dim_ = 0;
};

double evaluate(const OperatorSpec& op, const SymMatrix& M);

/// DF(M). Bellman ties pick the lowest index; zero eigenvalues count as
/// nonnegative for Pucci.
SymMatrix gradient(const OperatorSpec& op, const SymMatrix& M);

/// Index of the active Bellman member (lowest index on ties).
int bellman_argmax(const BellmanMaxOp& op, const SymMatrix& M);

enum class NormConvention { Trace, Spectral };

struct EllipticityEstimate {
  double lambda_hat = 0.0;
  double Lambda_hat = 0.0;
  int trials = 0;
};

/// Samples M and N = VᵀV ≥ 0 and returns the extreme ratios
/// (F(M+N) − F(M)) / ‖N‖. Under NormConvention::Trace, in-band operators
/// satisfy λ ≤ λ̂ ≤ Λ̂ ≤ Λ; a sample outside that band (beyond 1e−12
/// relative slack) throws with the witnessing pair. The spectral convention
/// is reported unchecked.
EllipticityEstimate ellipticity_probe(const OperatorSpec& op, int dim, int trials, std::uint64_t seed,
                                      NormConvention norm = NormConvention::Trace);

/// Fundamental-solution profile in the metric Minv = DF(A)^{-1}:
/// (xᵀ Minv x)^{(2−n)/2} for n ≥ 3, ½ log(xᵀ Minv x) for n = 2.
double gamma_eval(const SymMatrix& Minv, const Point& x, int n);

/// Dipole tail (e·x) (xᵀ Minv x)^{−n/2}.
double tail_eval(const Point& e, const SymMatrix& Minv, const Point& x, int n);

}  // namespace extasym
