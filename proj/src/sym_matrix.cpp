#include "extasym/sym_matrix.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace extasym {

Point make_point(std::initializer_list<double> coords) {
  if (coords.size() == 0 || coords.size() > static_cast<std::size_t>(kMaxDim))
    throw InvalidInput("make_point: unsupported dimension");
  Point p(static_cast<int>(coords.size()));
  int i = 0;
  for (double c : coords) p(i++) = c;
  return p;
}

SymMatrix::SymMatrix(int dim) : dim_(dim), m_(DenseSmall::Zero(dim, dim)) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("SymMatrix: unsupported dimension " + std::to_string(dim));
}

SymMatrix SymMatrix::from_dense(const DenseSmall& m) {
  if (m.rows() != m.cols()) throw InvalidInput("SymMatrix::from_dense: matrix not square");
  SymMatrix s(static_cast<int>(m.rows()));
  s.m_ = 0.5 * (m + m.transpose());
  return s;
}

SymMatrix SymMatrix::from_upper(int dim, std::initializer_list<double> upper) {
  SymMatrix s(dim);
  if (upper.size() != static_cast<std::size_t>(dim * (dim + 1) / 2))
    throw InvalidInput("SymMatrix::from_upper: expected n(n+1)/2 entries");
  auto it = upper.begin();
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) s.set(i, j, *it++);
  return s;
}

SymMatrix SymMatrix::identity(int dim, double scale) {
  SymMatrix s(dim);
  for (int i = 0; i < dim; ++i) s.m_(i, i) = scale;
  return s;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> diag) {
  SymMatrix s(static_cast<int>(diag.size()));
  int i = 0;
  for (double d : diag) {
    s.m_(i, i) = d;
    ++i;
  }
  return s;
}

SymMatrix SymMatrix::outer(const Point& v) {
  SymMatrix s(static_cast<int>(v.size()));
  s.m_ = v * v.transpose();
  return s;
}

double SymMatrix::frobenius_dot(const SymMatrix& other) const {
  if (other.dim_ != dim_) throw InvalidInput("SymMatrix: dimension mismatch");
  return m_.cwiseProduct(other.m_).sum();
}

double SymMatrix::spectral_norm() const {
  const Point ev = eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

Point SymMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<DenseSmall> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  if (o.dim_ != dim_) throw InvalidInput("SymMatrix: dimension mismatch");
  SymMatrix s = *this;
  s.m_ += o.m_;
  return s;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  if (o.dim_ != dim_) throw InvalidInput("SymMatrix: dimension mismatch");
  SymMatrix s = *this;
  s.m_ -= o.m_;
  return s;
}

SymMatrix SymMatrix::operator*(double k) const {
  SymMatrix s = *this;
  s.m_ *= k;
  return s;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.dim_ != dim_) throw InvalidInput("SymMatrix: dimension mismatch");
  m_ += o.m_;
  return *this;
}

SpdInverse invert_spd(const SymMatrix& m) {
  const Point ev = m.eigenvalues();
  if (!(ev(0) > 0.0)) throw InvalidInput("invert_spd: matrix is not positive definite: " + to_string(m));
  SpdInverse out;
  out.condition = ev(ev.size() - 1) / ev(0);
  out.ill_conditioned = out.condition > 1e8;
  const int n = m.dim();
  const DenseSmall inv = m.dense().ldlt().solve(DenseSmall::Identity(n, n));
  out.inverse = SymMatrix::from_dense(inv);
  return out;
}

std::string to_string(const SymMatrix& m) {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  for (int i = 0; i < m.dim(); ++i) {
    if (i) os << "; ";
    for (int j = 0; j < m.dim(); ++j) {
      if (j) os << ' ';
      os << m(i, j);
    }
  }
  os << ']';
  return os.str();
}

}  // namespace extasym
