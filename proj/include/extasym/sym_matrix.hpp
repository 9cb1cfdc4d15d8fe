#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace extasym {

/// Largest spatial dimension supported by the small fixed-capacity types.
/// Grids are 2D or 3D; pointwise radial checks go up to n = 5.
inline constexpr int kMaxDim = 6;

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using DenseSmall = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition.
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// Evaluation at a singular point (x = 0 for Γ, the tail, Kelvin).
class DomainError : public Error {
public:
  using Error::Error;
};

Point make_point(std::initializer_list<double> coords);

/// Real symmetric n x n matrix. Symmetric by construction: every mutation
/// writes both (i,j) and (j,i).
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);

  /// Symmetrizes: stores (m + m^T) / 2.
  static SymMatrix from_dense(const DenseSmall& m);
  /// Row-major upper triangle, n(n+1)/2 values.
  static SymMatrix from_upper(int dim, std::initializer_list<double> upper);
  static SymMatrix identity(int dim, double scale = 1.0);
  static SymMatrix diagonal(std::initializer_list<double> diag);
  static SymMatrix outer(const Point& v);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  const DenseSmall& dense() const { return m_; }

  double trace() const { return m_.trace(); }
  /// tr(A B) = sum_ij A_ij B_ij for symmetric arguments.
  double frobenius_dot(const SymMatrix& other) const;
  double quadratic_form(const Point& x) const { return x.dot(m_ * x); }
  Point apply(const Point& x) const { return m_ * x; }
  double spectral_norm() const;
  /// Ascending eigenvalues.
  Point eigenvalues() const;
  double max_abs_entry() const { return m_.cwiseAbs().maxCoeff(); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;
  SymMatrix& operator+=(const SymMatrix& o);

  bool all_finite() const { return m_.allFinite(); }

private:
  int dim_ = 0;
  DenseSmall m_;
};

inline SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

struct SpdInverse {
  SymMatrix inverse;
  double condition = 1.0;
  bool ill_conditioned = false;
};

/// Inverse of an SPD matrix by direct solve against the identity, then
/// symmetrized. Flags condition numbers above 1e8.
SpdInverse invert_spd(const SymMatrix& m);

std::string to_string(const SymMatrix& m);

}  // namespace extasym
