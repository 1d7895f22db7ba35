#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qcgain/sym_matrix.hpp"

namespace qcgain::sdp {

enum class BlockKind { kFree, kNonneg, kPsd };

/// One block of decision variables. For a PSD block `order` is the matrix
/// order k and the block occupies k(k+1)/2 scalars in scaled-vectorized form
/// (off-diagonal entries carry a factor sqrt(2)); otherwise `order` is the
/// number of scalars.
struct VariableBlock {
  BlockKind kind;
  int order;
  std::string name;
  int offset;
  int length;
};

/// Linear cone program in standard form:
///
///   minimize    c^T x
///   subject to  A x = b,  x in Free^f x R^l_+ x S^k1_+ x ... x S^kp_+
///
/// Constraint coefficients on PSD blocks are given per matrix entry X_ij
/// (i <= j), i.e. the caller writes a row as sum_{i<=j} coef_ij X_ij and the
/// program takes care of the sqrt(2) vectorization.
class ConeProgram {
 public:
  int add_free(int n, std::string name);
  int add_nonneg(int n, std::string name);
  int add_psd(int order, std::string name);

  /// Appends an equality row `... = rhs` and returns its index.
  int add_row(double rhs = 0.0);
  void add_rhs(int row, double value);

  /// coef * x[index] on a free or nonnegative block.
  void add_term(int row, int block, int index, double coef);
  /// coef * X(i, j) on a PSD block; (i, j) and (j, i) name the same entry.
  void add_psd_term(int row, int block, int i, int j, double coef);

  void set_cost(int block, int index, double coef);
  void set_psd_cost(int block, int i, int j, double coef);

  int num_rows() const { return static_cast<int>(b_.size()); }
  int num_vars() const { return num_vars_; }
  const std::vector<VariableBlock>& blocks() const { return blocks_; }
  const VariableBlock& block(int index) const { return blocks_.at(index); }
  std::optional<int> find_block(std::string_view name) const;
  int count_blocks(BlockKind kind) const;
  /// Number of scalar variables over all blocks of a kind.
  int count_scalars(BlockKind kind) const;
  /// Barrier parameter of the cone: orthant scalars plus sum of PSD orders.
  int cone_degree() const;

  Eigen::SparseMatrix<double> constraint_matrix() const;
  Eigen::VectorXd rhs() const;
  Eigen::VectorXd cost() const { return c_; }

  /// Block value of a primal (or dual slack) vector in the internal layout.
  Eigen::VectorXd vector_value(const Eigen::VectorXd& x, int block) const;
  SymMatrix psd_value(const Eigen::VectorXd& x, int block) const;

  /// Plain-text sparse-triplet dump; see docs/cone_program_format.md.
  void write_triplets(std::ostream& out) const;

 private:
  int add_block(BlockKind kind, int order, std::string name);
  int scalar_index(int block, int i, int j) const;

  std::vector<VariableBlock> blocks_;
  int num_vars_ = 0;
  std::vector<Eigen::Triplet<double>> entries_;
  std::vector<double> b_;
  Eigen::VectorXd c_;
};

enum class SolveStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kMaxIterations, kNumericalFailure };

std::string_view to_string(SolveStatus status);

struct SolverOptions {
  int max_iterations = 200;
  double step_fraction = 0.99;
  double feasibility_tol = 1e-9;
  double gap_tol = 1e-9;
  double infeasibility_tol = 1e-9;
  // When progress stops, the best iterate is still reported optimal if its
  // unscaled residuals are within accept_tol (1 + ||b|| + ||c||) and its gap
  // within accept_tol.
  double accept_tol = 1e-7;
  bool verbose = false;
};

struct Solution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x;  // primal, internal layout
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // dual slack, internal layout (zero on free blocks)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;              // |c'x - b'y| / (1 + |c'x|)
  double primal_residual = 0.0;  // ||Ax - b||
  double dual_residual = 0.0;    // ||A'y + z - c||
  int iterations = 0;
  double solve_seconds = 0.0;
  std::string message;
};

Solution solve(const ConeProgram& program, const SolverOptions& options = {});

struct EigenDecomposition {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
};

EigenDecomposition sym_eig(const SymMatrix& a);

/// Lower-triangular Cholesky factor of a + shift*I, or nullopt when that
/// matrix is not positive definite.
std::optional<Eigen::MatrixXd> chol_psd(const SymMatrix& a, double shift = 0.0);

}  // namespace qcgain::sdp
