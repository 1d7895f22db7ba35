#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qcgain {

/// Dense real symmetric matrix stored as its packed upper triangle.
///
/// Symmetry holds by construction. All entries are checked finite whenever a
/// matrix is built from external data.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n);

  static SymMatrix identity(int n);
  static SymMatrix diagonal(const Eigen::VectorXd& d);

  /// Reads the upper triangle of `a`. Throws DimensionMismatch if `a` is not
  /// square and Error if it is not symmetric to `rel_tol * (1 + ||a||_F)`.
  static SymMatrix from_dense(const Eigen::MatrixXd& a, double rel_tol = 1e-12);

  /// (a + a^T) / 2, for products that are symmetric only up to rounding.
  static SymMatrix symmetrized(const Eigen::MatrixXd& a);

  /// Builds from a packed upper triangle in row-major order.
  static SymMatrix from_packed(int n, const std::vector<double>& upper);

  int size() const { return n_; }
  std::size_t packed_size() const { return upper_.size(); }
  const std::vector<double>& packed() const { return upper_; }

  double operator()(int i, int j) const { return upper_[index(i, j)]; }
  void set(int i, int j, double value);

  Eigen::MatrixXd dense() const;

  double frobenius_norm() const;
  double min_eigenvalue() const;
  double max_eigenvalue() const;

  /// lambda_min >= -tol * (1 + ||A||_F).
  bool is_psd(double tol = 1e-8) const;
  /// lambda_max <= -tol.
  bool is_negative_definite(double tol = 1e-8) const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double s);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) = default;

 private:
  std::size_t index(int i, int j) const;

  int n_ = 0;
  std::vector<double> upper_;
};

/// Packed index of (i, j), i <= j, in a row-major upper triangle of order n.
inline std::size_t packed_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return static_cast<std::size_t>(i) * (2 * n - i + 1) / 2 + static_cast<std::size_t>(j - i);
}

/// Index of (i, j), i != j, in a row-major strict upper triangle of order n.
inline std::size_t offdiag_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return static_cast<std::size_t>(i) * (2 * n - i - 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

/// Symmetric matrix with zero diagonal from its strict upper triangle.
inline SymMatrix offdiag_matrix(int n, const double* v) {
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.set(i, j, v[offdiag_index(n, i, j)]);
  return out;
}

}  // namespace qcgain
