#include "qcgain/sym_matrix.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qcgain/errors.hpp"

namespace qcgain {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteEntry(std::string(what) + ": non-finite entry");
}

}  // namespace

SymMatrix::SymMatrix(int n) : n_(n), upper_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {
  if (n < 0) throw DimensionMismatch("SymMatrix: negative order");
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix s(n);
  for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
  return s;
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  SymMatrix s(static_cast<int>(d.size()));
  for (int i = 0; i < s.n_; ++i) s.set(i, i, d(i));
  return s;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("SymMatrix: matrix is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + ", not square");
  }
  if (!a.allFinite()) throw NonFiniteEntry("SymMatrix: non-finite entry");
  const double scale = 1.0 + a.norm();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > rel_tol * scale && a.size() > 0) {
    throw Error("SymMatrix: matrix is not symmetric");
  }
  SymMatrix s(static_cast<int>(a.rows()));
  for (int i = 0; i < s.n_; ++i)
    for (int j = i; j < s.n_; ++j) s.upper_[s.index(i, j)] = a(i, j);
  return s;
}

SymMatrix SymMatrix::symmetrized(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("SymMatrix: matrix is not square");
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  return from_dense(sym, 0.0);
}

SymMatrix SymMatrix::from_packed(int n, const std::vector<double>& upper) {
  SymMatrix s(n);
  if (upper.size() != s.upper_.size()) {
    throw DimensionMismatch("SymMatrix: packed length " + std::to_string(upper.size()) +
                            " does not match order " + std::to_string(n));
  }
  for (double v : upper) require_finite(v, "SymMatrix");
  s.upper_ = upper;
  return s;
}

void SymMatrix::set(int i, int j, double value) {
  require_finite(value, "SymMatrix::set");
  upper_[index(i, j)] = value;
}

std::size_t SymMatrix::index(int i, int j) const { return packed_index(n_, i, j); }

Eigen::MatrixXd SymMatrix::dense() const {
  Eigen::MatrixXd a(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) a(i, j) = a(j, i) = upper_[index(i, j)];
  return a;
}

double SymMatrix::frobenius_norm() const { return dense().norm(); }

double SymMatrix::min_eigenvalue() const {
  if (n_ == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double SymMatrix::max_eigenvalue() const {
  if (n_ == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(n_ - 1);
}

bool SymMatrix::is_psd(double tol) const {
  return min_eigenvalue() >= -tol * (1.0 + frobenius_norm());
}

bool SymMatrix::is_negative_definite(double tol) const { return max_eigenvalue() <= -tol; }

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.n_ != n_) throw DimensionMismatch("SymMatrix: order mismatch in +");
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] += other.upper_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  if (other.n_ != n_) throw DimensionMismatch("SymMatrix: order mismatch in -");
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] -= other.upper_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : upper_) v *= s;
  return *this;
}

}  // namespace qcgain
