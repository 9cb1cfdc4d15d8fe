#include "extasym/operators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace extasym {

namespace {

constexpr double kBandSlack = 1e-12;

void check_band(double lambda, double Lambda) {
  if (!(lambda > 0.0) || !(Lambda >= lambda) || !std::isfinite(Lambda))
    throw InvalidInput("ellipticity band requires 0 < lambda <= Lambda");
}

void check_in_band(const SymMatrix& B, double lambda, double Lambda) {
  const Point ev = B.eigenvalues();
  const double slack = kBandSlack * std::max(1.0, Lambda);
  if (ev(0) < lambda - slack || ev(ev.size() - 1) > Lambda + slack) {
    std::ostringstream os;
    os << "coefficient matrix " << to_string(B) << " has spectrum [" << ev(0) << ", " << ev(ev.size() - 1)
       << "] outside the band [" << lambda << ", " << Lambda << "]";
    throw InvalidInput(os.str());
  }
}

void check_dim(const OperatorSpec& op, const SymMatrix& M) {
  if (M.dim() < 1) throw InvalidInput("empty matrix argument");
  if (op.dim() != 0 && op.dim() != M.dim())
    throw InvalidInput("dimension mismatch: operator is " + std::to_string(op.dim()) + "D, matrix is " +
                       std::to_string(M.dim()) + "D");
}

struct Spectral {
  Point values;      // descending
  DenseSmall vectors;  // columns match values
};

// Eigenpairs sorted by descending eigenvalue; each eigenvector's first
// nonzero component is made positive.
Spectral spectral_decomposition(const SymMatrix& M) {
  Eigen::SelfAdjointEigenSolver<DenseSmall> es(M.dense());
  const int n = M.dim();
  Spectral s;
  s.values.resize(n);
  s.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    const int src = n - 1 - k;
    s.values(k) = es.eigenvalues()(src);
    Point v = es.eigenvectors().col(src);
    for (int i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-14) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    s.vectors.col(k) = v;
  }
  return s;
}

double pucci_value(const SymMatrix& M, double on_positive, double on_negative) {
  const Point ev = M.eigenvalues();
  double sum = 0.0;
  for (int i = 0; i < ev.size(); ++i) sum += ev(i) >= 0.0 ? on_positive * ev(i) : on_negative * ev(i);
  return sum;
}

SymMatrix pucci_gradient(const SymMatrix& M, double on_nonnegative, double on_negative) {
  const Spectral s = spectral_decomposition(M);
  const int n = M.dim();
  DenseSmall g = DenseSmall::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double w = s.values(k) >= 0.0 ? on_nonnegative : on_negative;
    g += w * s.vectors.col(k) * s.vectors.col(k).transpose();
  }
  return SymMatrix::from_dense(g);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

OperatorSpec OperatorSpec::linear(SymMatrix B) {
  const Point ev = B.eigenvalues();
  const double lambda = ev(0), Lambda = ev(ev.size() - 1);
  check_band(lambda, Lambda);
  const int dim = B.dim();
  return OperatorSpec(LinearOp{std::move(B)}, lambda, Lambda, dim);
}

OperatorSpec OperatorSpec::bellman_max(std::vector<BellmanMember> family) {
  if (family.empty()) throw InvalidInput("BellmanMax family must be nonempty");
  double lambda = std::numeric_limits<double>::infinity(), Lambda = 0.0;
  for (const BellmanMember& m : family) {
    const Point ev = m.B.eigenvalues();
    lambda = std::min(lambda, ev(0));
    Lambda = std::max(Lambda, ev(ev.size() - 1));
  }
  return bellman_max(std::move(family), lambda, Lambda);
}

OperatorSpec OperatorSpec::bellman_max(std::vector<BellmanMember> family, double lambda, double Lambda) {
  if (family.empty()) throw InvalidInput("BellmanMax family must be nonempty");
  check_band(lambda, Lambda);
  const int dim = family.front().B.dim();
  for (const BellmanMember& m : family) {
    if (m.B.dim() != dim) throw InvalidInput("BellmanMax members have mixed dimensions");
    if (!std::isfinite(m.c)) throw InvalidInput("BellmanMax member constant is not finite");
    check_in_band(m.B, lambda, Lambda);
  }
  return OperatorSpec(BellmanMaxOp{std::move(family)}, lambda, Lambda, dim);
}

OperatorSpec OperatorSpec::pucci_plus(double lambda, double Lambda) {
  check_band(lambda, Lambda);
  return OperatorSpec(PucciPlusOp{}, lambda, Lambda, 0);
}

OperatorSpec OperatorSpec::pucci_minus(double lambda, double Lambda) {
  check_band(lambda, Lambda);
  return OperatorSpec(PucciMinusOp{}, lambda, Lambda, 0);
}

std::string OperatorSpec::name() const {
  return std::visit(Overloaded{[](const LinearOp&) { return std::string("linear"); },
                               [](const BellmanMaxOp&) { return std::string("bellman_max"); },
                               [](const PucciPlusOp&) { return std::string("pucci_plus"); },
                               [](const PucciMinusOp&) { return std::string("pucci_minus"); }},
                    kind_);
}

int bellman_argmax(const BellmanMaxOp& op, const SymMatrix& M) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < op.family.size(); ++k) {
    const double v = op.family[k].B.frobenius_dot(M) + op.family[k].c;
    if (v > best_value) {
      best_value = v;
      best = static_cast<int>(k);
    }
  }
  return best;
}

double evaluate(const OperatorSpec& op, const SymMatrix& M) {
  check_dim(op, M);
  return std::visit(Overloaded{[&](const LinearOp& l) { return l.B.frobenius_dot(M); },
                               [&](const BellmanMaxOp& b) {
                                 const BellmanMember& m = b.family[bellman_argmax(b, M)];
                                 return m.B.frobenius_dot(M) + m.c;
                               },
                               [&](const PucciPlusOp&) { return pucci_value(M, op.Lambda(), op.lambda()); },
                               [&](const PucciMinusOp&) { return pucci_value(M, op.lambda(), op.Lambda()); }},
                    op.kind());
}

SymMatrix gradient(const OperatorSpec& op, const SymMatrix& M) {
  check_dim(op, M);
  return std::visit(Overloaded{[&](const LinearOp& l) { return l.B; },
                               [&](const BellmanMaxOp& b) { return b.family[bellman_argmax(b, M)].B; },
                               [&](const PucciPlusOp&) { return pucci_gradient(M, op.Lambda(), op.lambda()); },
                               [&](const PucciMinusOp&) { return pucci_gradient(M, op.lambda(), op.Lambda()); }},
                    op.kind());
}

EllipticityEstimate ellipticity_probe(const OperatorSpec& op, int dim, int trials, std::uint64_t seed,
                                      NormConvention norm) {
  if (trials < 1) throw InvalidInput("ellipticity_probe: trials must be >= 1");
  if (op.dim() != 0 && op.dim() != dim) throw InvalidInput("ellipticity_probe: dimension mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_matrix = [&] {
    DenseSmall m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) = gauss(rng);
    return m;
  };

  EllipticityEstimate est;
  est.lambda_hat = std::numeric_limits<double>::infinity();
  est.Lambda_hat = -std::numeric_limits<double>::infinity();
  est.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const SymMatrix M = SymMatrix::from_dense(random_matrix() * 3.0);
    const DenseSmall V = random_matrix();
    const SymMatrix N = SymMatrix::from_dense(V.transpose() * V);
    const double normN = norm == NormConvention::Trace ? N.trace() : N.spectral_norm();
    if (!(normN > 0.0)) continue;
    const double ratio = (evaluate(op, M + N) - evaluate(op, M)) / normN;
    if (norm == NormConvention::Trace) {
      const double slack = kBandSlack * std::max(1.0, op.Lambda());
      if (ratio < op.lambda() - slack || ratio > op.Lambda() + slack) {
        std::ostringstream os;
        os.precision(17);
        os << "ellipticity violation: ratio " << ratio << " outside [" << op.lambda() << ", " << op.Lambda()
           << "] at M = " << to_string(M) << ", N = " << to_string(N);
        throw Error(os.str());
      }
    }
    est.lambda_hat = std::min(est.lambda_hat, ratio);
    est.Lambda_hat = std::max(est.Lambda_hat, ratio);
  }
  return est;
}

namespace {

double metric_form(const SymMatrix& Minv, const Point& x, int n, const char* what) {
  if (x.size() != n || Minv.dim() != n) throw InvalidInput(std::string(what) + ": dimension mismatch");
  if (x.squaredNorm() == 0.0) throw DomainError(std::string(what) + ": singular at x = 0");
  const double q = Minv.quadratic_form(x);
  if (!(q > 0.0)) throw InvalidInput(std::string(what) + ": metric is not positive definite");
  return q;
}

}  // namespace

double gamma_eval(const SymMatrix& Minv, const Point& x, int n) {
  if (n < 2) throw InvalidInput("gamma_eval: n must be >= 2");
  const double q = metric_form(Minv, x, n, "gamma_eval");
  if (n == 2) return 0.5 * std::log(q);
  return std::pow(q, 0.5 * (2 - n));
}

double tail_eval(const Point& e, const SymMatrix& Minv, const Point& x, int n) {
  if (e.size() != n) throw InvalidInput("tail_eval: dimension mismatch");
  const double q = metric_form(Minv, x, n, "tail_eval");
  return e.dot(x) * std::pow(q, -0.5 * n);
}

}  // namespace extasym
