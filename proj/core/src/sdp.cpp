#include "qcgain/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "qcgain/errors.hpp"

namespace qcgain::sdp {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

int svec_length(int k) { return k * (k + 1) / 2; }

// svec layout: packed row-major upper triangle, off-diagonals scaled by sqrt(2)
// so that <X, Z> = svec(X)' svec(Z).
Eigen::MatrixXd smat(const double* v, int k) {
  Eigen::MatrixXd m(k, k);
  int idx = 0;
  for (int i = 0; i < k; ++i) {
    m(i, i) = v[idx++];
    for (int j = i + 1; j < k; ++j) m(i, j) = m(j, i) = v[idx++] / kSqrt2;
  }
  return m;
}

void svec(const Eigen::MatrixXd& m, double* v) {
  const int k = static_cast<int>(m.rows());
  int idx = 0;
  for (int i = 0; i < k; ++i) {
    v[idx++] = m(i, i);
    for (int j = i + 1; j < k; ++j) v[idx++] = 0.5 * (m(i, j) + m(j, i)) * kSqrt2;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ConeProgram

int ConeProgram::add_block(BlockKind kind, int order, std::string name) {
  if (order <= 0) throw DimensionMismatch("ConeProgram: block '" + name + "' must be nonempty");
  const int length = kind == BlockKind::kPsd ? svec_length(order) : order;
  blocks_.push_back(VariableBlock{kind, order, std::move(name), num_vars_, length});
  num_vars_ += length;
  c_.conservativeResize(num_vars_);
  c_.tail(length).setZero();
  return static_cast<int>(blocks_.size()) - 1;
}

int ConeProgram::add_free(int n, std::string name) { return add_block(BlockKind::kFree, n, std::move(name)); }
int ConeProgram::add_nonneg(int n, std::string name) { return add_block(BlockKind::kNonneg, n, std::move(name)); }
int ConeProgram::add_psd(int order, std::string name) { return add_block(BlockKind::kPsd, order, std::move(name)); }

int ConeProgram::add_row(double rhs) {
  b_.push_back(rhs);
  return static_cast<int>(b_.size()) - 1;
}

void ConeProgram::add_rhs(int row, double value) { b_.at(row) += value; }

int ConeProgram::scalar_index(int block, int i, int j) const {
  const VariableBlock& blk = blocks_.at(block);
  if (blk.kind != BlockKind::kPsd) throw Error("ConeProgram: block '" + blk.name + "' is not PSD");
  if (i < 0 || j < 0 || i >= blk.order || j >= blk.order) throw DimensionMismatch("ConeProgram: PSD index out of range");
  return blk.offset + static_cast<int>(packed_index(blk.order, i, j));
}

void ConeProgram::add_term(int row, int block, int index, double coef) {
  const VariableBlock& blk = blocks_.at(block);
  if (blk.kind == BlockKind::kPsd) throw Error("ConeProgram: use add_psd_term for block '" + blk.name + "'");
  if (index < 0 || index >= blk.length) throw DimensionMismatch("ConeProgram: index out of range");
  if (row < 0 || row >= num_rows()) throw DimensionMismatch("ConeProgram: row out of range");
  if (coef != 0.0) entries_.emplace_back(row, blk.offset + index, coef);
}

void ConeProgram::add_psd_term(int row, int block, int i, int j, double coef) {
  if (row < 0 || row >= num_rows()) throw DimensionMismatch("ConeProgram: row out of range");
  const int col = scalar_index(block, i, j);
  if (coef != 0.0) entries_.emplace_back(row, col, i == j ? coef : coef / kSqrt2);
}

void ConeProgram::set_cost(int block, int index, double coef) {
  const VariableBlock& blk = blocks_.at(block);
  if (blk.kind == BlockKind::kPsd) throw Error("ConeProgram: use set_psd_cost for block '" + blk.name + "'");
  if (index < 0 || index >= blk.length) throw DimensionMismatch("ConeProgram: index out of range");
  c_(blk.offset + index) = coef;
}

void ConeProgram::set_psd_cost(int block, int i, int j, double coef) {
  c_(scalar_index(block, i, j)) = i == j ? coef : coef / kSqrt2;
}

std::optional<int> ConeProgram::find_block(std::string_view name) const {
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    if (blocks_[k].name == name) return static_cast<int>(k);
  return std::nullopt;
}

int ConeProgram::count_blocks(BlockKind kind) const {
  return static_cast<int>(std::count_if(blocks_.begin(), blocks_.end(),
                                        [kind](const VariableBlock& b) { return b.kind == kind; }));
}

int ConeProgram::count_scalars(BlockKind kind) const {
  int n = 0;
  for (const auto& b : blocks_)
    if (b.kind == kind) n += b.length;
  return n;
}

int ConeProgram::cone_degree() const {
  int nu = 0;
  for (const auto& b : blocks_) {
    if (b.kind == BlockKind::kNonneg) nu += b.length;
    if (b.kind == BlockKind::kPsd) nu += b.order;
  }
  return nu;
}

Eigen::SparseMatrix<double> ConeProgram::constraint_matrix() const {
  Eigen::SparseMatrix<double> a(num_rows(), num_vars_);
  a.setFromTriplets(entries_.begin(), entries_.end());
  a.prune(0.0);
  return a;
}

Eigen::VectorXd ConeProgram::rhs() const {
  return Eigen::Map<const Eigen::VectorXd>(b_.data(), static_cast<Eigen::Index>(b_.size()));
}

Eigen::VectorXd ConeProgram::vector_value(const Eigen::VectorXd& x, int block) const {
  const VariableBlock& blk = blocks_.at(block);
  return x.segment(blk.offset, blk.length);
}

SymMatrix ConeProgram::psd_value(const Eigen::VectorXd& x, int block) const {
  const VariableBlock& blk = blocks_.at(block);
  if (blk.kind != BlockKind::kPsd) throw Error("ConeProgram: block '" + blk.name + "' is not PSD");
  return SymMatrix::from_dense(smat(x.data() + blk.offset, blk.order), 0.0);
}

void ConeProgram::write_triplets(std::ostream& out) const {
  char buf[128];
  out << "# qcgain cone program v1\n";
  out << "rows " << num_rows() << " vars " << num_vars_ << " blocks " << blocks_.size() << "\n";
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& b = blocks_[k];
    const char* kind = b.kind == BlockKind::kFree ? "free" : b.kind == BlockKind::kNonneg ? "nonneg" : "psd";
    out << "block " << k << ' ' << kind << ' ' << b.order << ' ' << b.offset << ' ' << b.length << ' '
        << b.name << "\n";
  }
  for (int j = 0; j < num_vars_; ++j) {
    if (c_(j) == 0.0) continue;
    std::snprintf(buf, sizeof buf, "c %d %.17g\n", j, c_(j));
    out << buf;
  }
  for (int i = 0; i < num_rows(); ++i) {
    if (b_[i] == 0.0) continue;
    std::snprintf(buf, sizeof buf, "b %d %.17g\n", i, b_[i]);
    out << buf;
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> a = constraint_matrix();
  for (int i = 0; i < a.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, i); it; ++it) {
      std::snprintf(buf, sizeof buf, "A %d %d %.17g\n", i, static_cast<int>(it.col()), it.value());
      out << buf;
    }
  }
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "OPTIMAL";
    case SolveStatus::kPrimalInfeasible: return "INFEASIBLE";
    case SolveStatus::kDualInfeasible: return "UNBOUNDED";
    case SolveStatus::kMaxIterations: return "MAX_ITER";
    case SolveStatus::kNumericalFailure: return "NUMERICAL_FAILURE";
  }
  return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// Dense kernels

EigenDecomposition sym_eig(const SymMatrix& a) {
  EigenDecomposition out;
  if (a.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.dense());
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

std::optional<Eigen::MatrixXd> chol_psd(const SymMatrix& a, double shift) {
  Eigen::MatrixXd m = a.dense();
  m.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Eigen::MatrixXd l = llt.matrixL();
  if ((l.diagonal().array() <= 0.0).any()) return std::nullopt;
  return l;
}

// ---------------------------------------------------------------------------
// Interior-point solver
//
// Homogeneous self-dual embedding of
//   (P) min c'x  s.t. Ax = b, x_K in K, x_F free
//   (D) max b'y  s.t. A_F'y = c_F, A_K'y + z = c_K, z in K
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector. Free
// variables are eliminated from the normal equations with a Schur complement.

namespace {

struct PsdBlock {
  int offset;  // into the full variable vector
  int order;
  int length;
  std::vector<int> rows;   // rows of A touching the block
  Eigen::MatrixXd a_sub;   // A restricted to (rows, block columns)
};

struct Layout {
  std::vector<int> free_idx;
  std::vector<int> orth_idx;
  std::vector<PsdBlock> psd;
  int degree = 0;
};

// Scaled-space vector: orthant part plus one symmetric matrix per PSD block.
struct Scaled {
  Eigen::VectorXd orth;
  std::vector<Eigen::MatrixXd> psd;
};

struct Scaling {
  Eigen::VectorXd d;       // orthant: sqrt(x / z)
  Eigen::VectorXd lambda;  // orthant: sqrt(x z)
  std::vector<Eigen::MatrixXd> g, g_inv, w;
  std::vector<Eigen::VectorXd> lam;
};

class Cone {
 public:
  explicit Cone(const Layout& layout) : layout_(layout) {}

  void set_identity(Eigen::VectorXd& v) const {
    for (int i : layout_.orth_idx) v(i) = 1.0;
    for (const auto& b : layout_.psd) svec(Eigen::MatrixXd::Identity(b.order, b.order), v.data() + b.offset);
  }

  double dot(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
    double s = 0.0;
    for (int i : layout_.orth_idx) s += x(i) * z(i);
    for (const auto& b : layout_.psd) s += x.segment(b.offset, b.length).dot(z.segment(b.offset, b.length));
    return s;
  }

  bool compute_scaling(const Eigen::VectorXd& x, const Eigen::VectorXd& z, Scaling& s) const {
    const auto no = static_cast<Eigen::Index>(layout_.orth_idx.size());
    s.d.resize(no);
    s.lambda.resize(no);
    for (Eigen::Index k = 0; k < no; ++k) {
      const int i = layout_.orth_idx[k];
      if (!(x(i) > 0.0) || !(z(i) > 0.0)) return false;
      s.d(k) = std::sqrt(x(i) / z(i));
      s.lambda(k) = std::sqrt(x(i) * z(i));
    }
    const std::size_t np = layout_.psd.size();
    s.g.resize(np);
    s.g_inv.resize(np);
    s.w.resize(np);
    s.lam.resize(np);
    for (std::size_t k = 0; k < np; ++k) {
      const auto& b = layout_.psd[k];
      const Eigen::MatrixXd xm = smat(x.data() + b.offset, b.order);
      const Eigen::MatrixXd zm = smat(z.data() + b.offset, b.order);
      Eigen::LLT<Eigen::MatrixXd> lx(xm), lz(zm);
      if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      const Eigen::MatrixXd lxm = lx.matrixL();
      const Eigen::MatrixXd lzm = lz.matrixL();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(lzm.transpose() * lxm, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Eigen::VectorXd sigma = svd.singularValues();
      if (!(sigma.minCoeff() > 0.0)) return false;
      const Eigen::VectorXd isq = sigma.cwiseSqrt().cwiseInverse();
      // G = Lx V Sigma^{-1/2}, G^{-1} = Sigma^{1/2} V' Lx^{-1}
      s.g[k] = lxm * svd.matrixV() * isq.asDiagonal();
      const Eigen::MatrixXd lx_inv = lxm.triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(b.order, b.order));
      s.g_inv[k] = sigma.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * lx_inv;
      s.w[k] = s.g[k] * s.g[k].transpose();
      s.lam[k] = sigma;
    }
    return true;
  }

  // W^{-T} dx (orth: dx / d; psd: G^{-1} dX G^{-T})
  Scaled scale_primal(const Eigen::VectorXd& dx, const Scaling& s) const {
    Scaled out;
    out.orth.resize(s.d.size());
    for (Eigen::Index k = 0; k < s.d.size(); ++k) out.orth(k) = dx(layout_.orth_idx[k]) / s.d(k);
    out.psd.resize(layout_.psd.size());
    for (std::size_t k = 0; k < layout_.psd.size(); ++k) {
      const auto& b = layout_.psd[k];
      out.psd[k] = s.g_inv[k] * smat(dx.data() + b.offset, b.order) * s.g_inv[k].transpose();
    }
    return out;
  }

  // W dz (orth: d dz; psd: G' dZ G)
  Scaled scale_dual(const Eigen::VectorXd& dz, const Scaling& s) const {
    Scaled out;
    out.orth.resize(s.d.size());
    for (Eigen::Index k = 0; k < s.d.size(); ++k) out.orth(k) = dz(layout_.orth_idx[k]) * s.d(k);
    out.psd.resize(layout_.psd.size());
    for (std::size_t k = 0; k < layout_.psd.size(); ++k) {
      const auto& b = layout_.psd[k];
      out.psd[k] = s.g[k].transpose() * smat(dz.data() + b.offset, b.order) * s.g[k];
    }
    return out;
  }

  // x-space image W^T q of a scaled-space target after dividing by lambda:
  // solves lambda o u = r for u, then returns W^T u.
  void lambda_solve_to_primal(const Scaled& r, const Scaling& s, Eigen::VectorXd& out) const {
    for (Eigen::Index k = 0; k < s.d.size(); ++k) out(layout_.orth_idx[k]) = s.d(k) * r.orth(k) / s.lambda(k);
    for (std::size_t k = 0; k < layout_.psd.size(); ++k) {
      const auto& b = layout_.psd[k];
      const Eigen::VectorXd& l = s.lam[k];
      Eigen::MatrixXd u(b.order, b.order);
      for (int i = 0; i < b.order; ++i)
        for (int j = 0; j < b.order; ++j) u(i, j) = 2.0 * r.psd[k](i, j) / (l(i) + l(j));
      svec(s.g[k] * u * s.g[k].transpose(), out.data() + b.offset);
    }
  }

  // D v = W^T W v (orth: d^2 v; psd: W V W)
  void apply_d(const Eigen::VectorXd& v, const Scaling& s, Eigen::VectorXd& out) const {
    for (Eigen::Index k = 0; k < s.d.size(); ++k) {
      const int i = layout_.orth_idx[k];
      out(i) = s.d(k) * s.d(k) * v(i);
    }
    for (std::size_t k = 0; k < layout_.psd.size(); ++k) {
      const auto& b = layout_.psd[k];
      svec(s.w[k] * smat(v.data() + b.offset, b.order) * s.w[k], out.data() + b.offset);
    }
  }

  // lambda o lambda
  Scaled lambda_sq(const Scaling& s) const {
    Scaled out;
    out.orth = s.lambda.cwiseProduct(s.lambda);
    for (const auto& l : s.lam) out.psd.emplace_back(l.cwiseProduct(l).asDiagonal());
    return out;
  }

  static Scaled jordan(const Scaled& a, const Scaled& b) {
    Scaled out;
    out.orth = a.orth.cwiseProduct(b.orth);
    for (std::size_t k = 0; k < a.psd.size(); ++k) out.psd.push_back(0.5 * (a.psd[k] * b.psd[k] + b.psd[k] * a.psd[k]));
    return out;
  }

  // Largest alpha with lambda + alpha * u in the cone (capped at `cap`).
  double max_step(const Scaled& u, const Scaling& s, double cap) const {
    double alpha = cap;
    for (Eigen::Index k = 0; k < u.orth.size(); ++k)
      if (u.orth(k) < 0.0) alpha = std::min(alpha, -s.lambda(k) / u.orth(k));
    for (std::size_t k = 0; k < u.psd.size(); ++k) {
      const Eigen::VectorXd isq = s.lam[k].cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd t = isq.asDiagonal() * u.psd[k] * isq.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly);
      const double emin = es.eigenvalues()(0);
      if (emin < 0.0) alpha = std::min(alpha, -1.0 / emin);
    }
    return alpha;
  }

  int degree() const { return layout_.degree; }

 private:
  const Layout& layout_;
};

Scaled axpy(double a, const Scaled& x, const Scaled& y) {
  Scaled out;
  out.orth = a * x.orth + y.orth;
  for (std::size_t k = 0; k < x.psd.size(); ++k) out.psd.push_back(a * x.psd[k] + y.psd[k]);
  return out;
}

// Normal-equation system [H A_F; A_F' 0] with H = A_K D A_K'.
class KktSolver {
 public:
  KktSolver(const Eigen::SparseMatrix<double>& a, const Layout& layout) : a_(a), layout_(layout) {
    const int m = static_cast<int>(a.rows());
    a_free_.resize(m, static_cast<Eigen::Index>(layout.free_idx.size()));
    for (std::size_t k = 0; k < layout.free_idx.size(); ++k) a_free_.col(k) = a.col(layout.free_idx[k]);
  }

  bool factor(const Cone& cone, const Scaling& s) {
    const int m = static_cast<int>(a_.rows());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 4);
    // orthant columns
    for (Eigen::Index k = 0; k < s.d.size(); ++k) {
      const int col = layout_.orth_idx[k];
      const double w = s.d(k) * s.d(k);
      for (Eigen::SparseMatrix<double>::InnerIterator i1(a_, col); i1; ++i1)
        for (Eigen::SparseMatrix<double>::InnerIterator i2(a_, col); i2; ++i2)
          trip.emplace_back(static_cast<int>(i1.row()), static_cast<int>(i2.row()), w * i1.value() * i2.value());
    }
    // PSD blocks
    for (std::size_t k = 0; k < layout_.psd.size(); ++k) {
      const PsdBlock& b = layout_.psd[k];
      if (b.rows.empty()) continue;
      const Eigen::MatrixXd& w = s.w[k];
      Eigen::MatrixXd dmat(b.length, b.length);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(b.length), col(b.length);
      for (int j = 0; j < b.length; ++j) {
        e.setZero();
        e(j) = 1.0;
        svec(w * smat(e.data(), b.order) * w, col.data());
        dmat.col(j) = col;
      }
      const Eigen::MatrixXd h = b.a_sub * dmat * b.a_sub.transpose();
      const int r = static_cast<int>(b.rows.size());
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) trip.emplace_back(b.rows[i], b.rows[j], h(i, j));
    }
    h_.resize(m, m);
    h_.setFromTriplets(trip.begin(), trip.end());
    double dmax = 1.0;
    for (int i = 0; i < m; ++i) dmax = std::max(dmax, h_.coeff(i, i));
    // Quasi-definite regularization of [H A_F; A_F' 0]; removed by refinement.
    const double delta = 1e-14 * dmax;
    const int nf = static_cast<int>(a_free_.cols());
    std::vector<Eigen::Triplet<double>> kt;
    kt.reserve(static_cast<std::size_t>(h_.nonZeros()) + static_cast<std::size_t>(m + 2 * nf * m + nf));
    for (int k = 0; k < h_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(h_, k); it; ++it)
        kt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < m; ++i) kt.emplace_back(i, i, delta);
    for (int j = 0; j < nf; ++j) {
      for (int i = 0; i < m; ++i) {
        const double v = a_free_(i, j);
        if (v == 0.0) continue;
        kt.emplace_back(i, m + j, v);
        kt.emplace_back(m + j, i, v);
      }
      kt.emplace_back(m + j, m + j, -delta);
    }
    Eigen::SparseMatrix<double> k(m + nf, m + nf);
    k.setFromTriplets(kt.begin(), kt.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(k);
      analyzed_ = true;
    }
    ldlt_.factorize(k);
    if (ldlt_.info() != Eigen::Success) return false;
    (void)cone;
    return true;
  }

  // Solves H dy + A_F dxf = r1, A_F' dy = r2, refining against the
  // unregularized system.
  void solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dy, Eigen::VectorXd& dxf) const {
    const Eigen::Index m = r1.size(), nf = r2.size();
    Eigen::VectorXd rhs(m + nf);
    rhs << r1, r2;
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    const double rnorm = std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 8; ++it) {
      const Eigen::VectorXd res = rhs - apply(sol);
      const double e = res.lpNorm<Eigen::Infinity>();
      if (!(e < prev) || e <= 1e-15 * rnorm) break;
      prev = e;
      sol += ldlt_.solve(res);
    }
    dy = sol.head(m);
    dxf = sol.tail(nf);
  }

 private:
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    const Eigen::Index m = h_.rows(), nf = a_free_.cols();
    Eigen::VectorXd out(m + nf);
    out.head(m) = h_ * v.head(m);
    if (nf > 0) {
      out.head(m) += a_free_ * v.tail(nf);
      out.tail(nf) = a_free_.transpose() * v.head(m);
    }
    return out;
  }

  const Eigen::SparseMatrix<double>& a_;
  const Layout& layout_;
  Eigen::MatrixXd a_free_;
  Eigen::SparseMatrix<double> h_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analyzed_ = false;
};

struct Presolved {
  Eigen::SparseMatrix<double> a;
  Eigen::VectorXd b, c;
  std::vector<int> kept_rows;  // original row index of each kept row
  Eigen::VectorXd row_scale;   // multiplier applied to each kept row
  double b_scale = 1.0, c_scale = 1.0;
  bool inconsistent = false;
};

// Removes empty and duplicate (parallel) rows, then equilibrates.
Presolved presolve(const Eigen::SparseMatrix<double>& a_orig, const Eigen::VectorXd& b_orig,
                   const Eigen::VectorXd& c_orig) {
  Presolved p;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> ar = a_orig;
  using RowKey = std::vector<std::pair<int, double>>;
  std::map<RowKey, std::pair<int, double>> seen;  // normalized row -> (row, normalized rhs)
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> bs, scales;
  for (int i = 0; i < ar.rows(); ++i) {
    RowKey key;
    double norm2 = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it) {
      key.emplace_back(static_cast<int>(it.col()), it.value());
      norm2 += it.value() * it.value();
    }
    const double bi = b_orig(i);
    if (key.empty()) {
      if (std::abs(bi) > 1e-12 * (1.0 + b_orig.lpNorm<Eigen::Infinity>())) p.inconsistent = true;
      continue;
    }
    const double inv = (key.front().second < 0.0 ? -1.0 : 1.0) / std::sqrt(norm2);
    // Round the normalized key so that rows equal to ~1e-12 collide.
    for (auto& kv : key) kv.second = std::round(kv.second * inv * 1e12) / 1e12;
    const double bn = bi * inv;
    auto [pos, inserted] = seen.emplace(key, std::make_pair(i, bn));
    if (!inserted) {
      if (std::abs(pos->second.second - bn) > 1e-9 * (1.0 + std::abs(bn))) p.inconsistent = true;
      continue;
    }
    const int r = static_cast<int>(p.kept_rows.size());
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it)
      trip.emplace_back(r, static_cast<int>(it.col()), it.value() * std::abs(inv));
    p.kept_rows.push_back(i);
    bs.push_back(bi * std::abs(inv));
    scales.push_back(std::abs(inv));
  }
  const int m = static_cast<int>(p.kept_rows.size());
  p.a.resize(m, a_orig.cols());
  p.a.setFromTriplets(trip.begin(), trip.end());
  p.b = Eigen::Map<Eigen::VectorXd>(bs.data(), m);
  p.row_scale = Eigen::Map<Eigen::VectorXd>(scales.data(), m);
  p.b_scale = std::max(1.0, p.b.norm());
  p.c_scale = std::max(1.0, c_orig.norm());
  p.b /= p.b_scale;
  p.c = c_orig / p.c_scale;
  return p;
}

Layout make_layout(const ConeProgram& prog, const Eigen::SparseMatrix<double>& a) {
  Layout layout;
  for (const auto& blk : prog.blocks()) {
    switch (blk.kind) {
      case BlockKind::kFree:
        for (int j = 0; j < blk.length; ++j) layout.free_idx.push_back(blk.offset + j);
        break;
      case BlockKind::kNonneg:
        for (int j = 0; j < blk.length; ++j) layout.orth_idx.push_back(blk.offset + j);
        layout.degree += blk.length;
        break;
      case BlockKind::kPsd: {
        PsdBlock b{blk.offset, blk.order, blk.length, {}, {}};
        std::vector<int> rows;
        for (int j = 0; j < blk.length; ++j)
          for (Eigen::SparseMatrix<double>::InnerIterator it(a, blk.offset + j); it; ++it)
            rows.push_back(static_cast<int>(it.row()));
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        b.rows = rows;
        b.a_sub = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), blk.length);
        for (int j = 0; j < blk.length; ++j)
          for (Eigen::SparseMatrix<double>::InnerIterator it(a, blk.offset + j); it; ++it) {
            const auto pos = std::lower_bound(rows.begin(), rows.end(), static_cast<int>(it.row())) - rows.begin();
            b.a_sub(pos, j) = it.value();
          }
        layout.psd.push_back(std::move(b));
        layout.degree += blk.order;
        break;
      }
    }
  }
  return layout;
}

double safe_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.norm(); }

}  // namespace

Solution solve(const ConeProgram& program, const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  Solution sol;
  const int n = program.num_vars();
  const Eigen::SparseMatrix<double> a_orig = program.constraint_matrix();
  const Eigen::VectorXd b_orig = program.rhs();
  const Eigen::VectorXd c_orig = program.cost();
  auto finish = [&](Solution& s) -> Solution {
    s.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(s);
  };

  const Presolved pre = presolve(a_orig, b_orig, c_orig);
  if (pre.inconsistent) {
    sol.status = SolveStatus::kPrimalInfeasible;
    sol.message = "inconsistent equality rows";
    sol.x = Eigen::VectorXd::Zero(n);
    sol.y = Eigen::VectorXd::Zero(program.num_rows());
    sol.z = Eigen::VectorXd::Zero(n);
    return finish(sol);
  }

  const Eigen::SparseMatrix<double>& a = pre.a;
  const Eigen::SparseMatrix<double> at = a.transpose();
  const Eigen::VectorXd& b = pre.b;
  const Eigen::VectorXd& c = pre.c;
  const int m = static_cast<int>(a.rows());
  const Layout layout = make_layout(program, a);
  const Cone cone(layout);
  KktSolver kkt(a, layout);

  std::vector<char> is_free(n, 0);
  for (int i : layout.free_idx) is_free[i] = 1;
  auto zero_free = [&](Eigen::VectorXd& v) {
    for (int i : layout.free_idx) v(i) = 0.0;
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), z = Eigen::VectorXd::Zero(n), y = Eigen::VectorXd::Zero(m);
  cone.set_identity(x);
  cone.set_identity(z);
  double tau = 1.0, kappa = 1.0;
  const double nu = static_cast<double>(cone.degree()) + 1.0;
  const double bnorm = safe_norm(b), cnorm = safe_norm(c);

  Eigen::VectorXd c_k = c;
  zero_free(c_k);
  Eigen::VectorXd c_f(static_cast<Eigen::Index>(layout.free_idx.size()));
  for (std::size_t k = 0; k < layout.free_idx.size(); ++k) c_f(k) = c(layout.free_idx[k]);

  auto free_part = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(layout.free_idx.size()));
    for (std::size_t k = 0; k < layout.free_idx.size(); ++k) out(k) = v(layout.free_idx[k]);
    return out;
  };

  SolveStatus status = SolveStatus::kMaxIterations;
  double pres = 0.0, dres = 0.0, gap = 0.0;
  int iter = 0;
  int stalls = 0;
  Scaling sc;
  struct Iterate {
    Eigen::VectorXd x, y, z;
    double tau = 1.0, kappa = 1.0, merit = std::numeric_limits<double>::infinity();
  } best;
  int since_best = 0;
  for (; iter <= options.max_iterations; ++iter) {
    // Residuals of the embedding.
    const Eigen::VectorXd ax = a * x;
    const Eigen::VectorXd aty = at * y;
    const Eigen::VectorXd r_p = b * tau - ax;
    const Eigen::VectorXd r_d = c * tau - aty - z;
    const double cx = c.dot(x), by = b.dot(y);
    const double r_g = kappa - by + cx;
    const double mu = (cone.dot(x, z) + tau * kappa) / nu;

    pres = safe_norm(r_p) / tau / (1.0 + bnorm);
    dres = safe_norm(r_d) / tau / (1.0 + cnorm);
    gap = std::abs(cx - by) / tau / (1.0 + std::abs(cx / tau));
    if (options.verbose) {
      std::fprintf(stderr, "%3d  pobj % .6e  dobj % .6e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kap %.2e  mu %.2e\n",
                   iter, cx / tau, by / tau, pres, dres, gap, tau, kappa, mu);
    }
    if (pres <= options.feasibility_tol && dres <= options.feasibility_tol && gap <= options.gap_tol) {
      status = SolveStatus::kOptimal;
      break;
    }
    if (const double merit = std::max({pres, dres, gap}); merit < best.merit) {
      best = {x, y, z, tau, kappa, merit};
      since_best = 0;
    } else if (best.merit < 1e-5 && ++since_best >= 8) {
      status = SolveStatus::kNumericalFailure;
      sol.message = "no progress";
      break;
    }
    // Infeasibility certificates.
    if (by > 0.0) {
      Eigen::VectorXd cert = aty + z;
      if (safe_norm(cert) <= options.infeasibility_tol * by * std::max(1.0, 1.0 / std::max(bnorm, 1e-300)) &&
          tau < 1e-3 * kappa) {
        status = SolveStatus::kPrimalInfeasible;
        break;
      }
    }
    if (cx < 0.0) {
      if (safe_norm(ax) <= options.infeasibility_tol * (-cx) * std::max(1.0, 1.0 / std::max(cnorm, 1e-300)) &&
          tau < 1e-3 * kappa) {
        status = SolveStatus::kDualInfeasible;
        break;
      }
    }
    if (iter == options.max_iterations) break;

    if (!cone.compute_scaling(x, z, sc)) {
      status = SolveStatus::kNumericalFailure;
      sol.message = "scaling breakdown";
      break;
    }
    if (!kkt.factor(cone, sc)) {
      status = SolveStatus::kNumericalFailure;
      sol.message = "normal-equation factorization breakdown";
      break;
    }


    // Direction independent of the right-hand side: K [q_y; q_F] = [b + A_K D c_K; c_F].
    Eigen::VectorXd dc(n);
    dc.setZero();
    cone.apply_d(c_k, sc, dc);
    Eigen::VectorXd q_y, q_f;
    kkt.solve(b + a * dc, c_f, q_y, q_f);
    Eigen::VectorXd q_k = Eigen::VectorXd::Zero(n);
    {
      Eigen::VectorXd atq = at * q_y;
      zero_free(atq);
      Eigen::VectorXd tmp = atq - c_k;
      cone.apply_d(tmp, sc, q_k);
    }

    struct Direction {
      Eigen::VectorXd dx, dy, dz;
      double dtau = 0.0, dkappa = 0.0;
    };

    // General right-hand side of the linearized embedding:
    //   A dx - b dtau = r1,  A'dy + dz - c dtau = r2,  b'dy - c'dx - dkappa = r3,
    //   dx_K + D dz_K = r4,  kappa dtau + tau dkappa = r5.
    auto solve_rhs = [&](const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, double r3, const Eigen::VectorXd& r4,
                         double r5) {
      Direction d;
      Eigen::VectorXd r2k = r2;
      zero_free(r2k);
      Eigen::VectorXd d_r2k = Eigen::VectorXd::Zero(n);
      cone.apply_d(r2k, sc, d_r2k);
      Eigen::VectorXd base_k = r4 - d_r2k;  // p_K without the D A_K' p_y term
      zero_free(base_k);
      Eigen::VectorXd p_y, p_f;
      kkt.solve(r1 - a * base_k, free_part(r2), p_y, p_f);
      Eigen::VectorXd p_k = Eigen::VectorXd::Zero(n);
      {
        Eigen::VectorXd atp = at * p_y;
        zero_free(atp);
        cone.apply_d(atp, sc, p_k);
        p_k += base_k;
      }
      const double num = r3 - b.dot(p_y) + c_k.dot(p_k) + c_f.dot(p_f) + r5 / tau;
      const double den = b.dot(q_y) - c_k.dot(q_k) - c_f.dot(q_f) + kappa / tau;
      d.dtau = num / den;
      d.dy = p_y + d.dtau * q_y;
      d.dx = p_k + d.dtau * q_k;
      const Eigen::VectorXd dxf = p_f + d.dtau * q_f;
      for (std::size_t k = 0; k < layout.free_idx.size(); ++k) d.dx(layout.free_idx[k]) = dxf(k);
      d.dz = r2k - at * d.dy + c_k * d.dtau;
      zero_free(d.dz);
      d.dkappa = (r5 - kappa * d.dtau) / tau;
      return d;
    };

    auto newton = [&](double eta, const Scaled& r_c, double r_tk) {
      Eigen::VectorXd r_xz = Eigen::VectorXd::Zero(n);
      cone.lambda_solve_to_primal(r_c, sc, r_xz);
      const Eigen::VectorXd r1 = eta * r_p, r2 = eta * r_d;
      const double r3 = eta * r_g;
      Direction d = solve_rhs(r1, r2, r3, r_xz, r_tk);
      // Refine against the unreduced system; the normal equations lose
      // accuracy as the scaling becomes ill-conditioned.
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd e1 = r1 - (a * d.dx - b * d.dtau);
        Eigen::VectorXd e2 = r2 - (at * d.dy + d.dz - c * d.dtau);
        const double e3 = r3 - (b.dot(d.dy) - c.dot(d.dx) - d.dkappa);
        Eigen::VectorXd ddz = Eigen::VectorXd::Zero(n);
        cone.apply_d(d.dz, sc, ddz);
        Eigen::VectorXd e4 = r_xz - d.dx - ddz;
        zero_free(e4);
        const double e5 = r_tk - (kappa * d.dtau + tau * d.dkappa);
        const Direction c2 = solve_rhs(e1, e2, e3, e4, e5);
        d.dx += c2.dx;
        d.dy += c2.dy;
        d.dz += c2.dz;
        d.dtau += c2.dtau;
        d.dkappa += c2.dkappa;
      }
      return d;
    };

    auto step_length = [&](const Direction& d, const Scaled& dxs, const Scaled& dzs, double cap) {
      double alpha = std::min(cone.max_step(dxs, sc, cap), cone.max_step(dzs, sc, cap));
      if (d.dtau < 0.0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0.0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    // Predictor.
    const Scaled lsq = cone.lambda_sq(sc);
    Scaled r_aff = lsq;
    r_aff.orth *= -1.0;
    for (auto& mtx : r_aff.psd) mtx *= -1.0;
    const Direction aff = newton(1.0, r_aff, -tau * kappa);
    if (!aff.dx.allFinite() || !aff.dy.allFinite() || !std::isfinite(aff.dtau)) {
      status = SolveStatus::kNumericalFailure;
      sol.message = "non-finite predictor direction";
      break;
    }
    const Scaled dxs_a = cone.scale_primal(aff.dx, sc);
    const Scaled dzs_a = cone.scale_dual(aff.dz, sc);
    const double alpha_a = step_length(aff, dxs_a, dzs_a, 1.0);
    const double mu_aff =
        (cone.dot(x + alpha_a * aff.dx, z + alpha_a * aff.dz) + (tau + alpha_a * aff.dtau) * (kappa + alpha_a * aff.dkappa)) /
        nu;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector.
    // r_c = sigma mu e - lambda o lambda - dxs_a o dzs_a
    Scaled r_c = axpy(1.0, Cone::jordan(dxs_a, dzs_a), lsq);
    r_c.orth = -r_c.orth;
    for (auto& mtx : r_c.psd) mtx = -mtx;
    r_c.orth.array() += sigma * mu;
    for (auto& mtx : r_c.psd) mtx.diagonal().array() += sigma * mu;
    const double r_tk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
    const Direction dir = newton(1.0 - sigma, r_c, r_tk);
    if (!dir.dx.allFinite() || !dir.dy.allFinite() || !std::isfinite(dir.dtau)) {
      status = SolveStatus::kNumericalFailure;
      sol.message = "non-finite corrector direction";
      break;
    }
    const Scaled dxs = cone.scale_primal(dir.dx, sc);
    const Scaled dzs = cone.scale_dual(dir.dz, sc);
    const double alpha_max = step_length(dir, dxs, dzs, 1e30);
    const double alpha = std::min(1.0, options.step_fraction * alpha_max);

    x += alpha * dir.dx;
    y += alpha * dir.dy;
    z += alpha * dir.dz;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;

    if (alpha < 1e-8) {
      if (++stalls >= 3) {
        status = SolveStatus::kNumericalFailure;
        sol.message = "step length stalled";
        break;
      }
    } else {
      stalls = 0;
    }
  }

  // On a stall, fall back to the best iterate seen.
  const bool stopped_early = status == SolveStatus::kMaxIterations || status == SolveStatus::kNumericalFailure;
  if (stopped_early && best.x.size() == n) {
    x = best.x;
    y = best.y;
    z = best.z;
    tau = best.tau;
    kappa = best.kappa;
  }

  sol.status = status;
  sol.iterations = iter;

  // Undo scaling: x = sb * x^, z = sc * z^, y_orig = sc * R y^.
  const double t = (status == SolveStatus::kOptimal || status == SolveStatus::kMaxIterations ||
                    status == SolveStatus::kNumericalFailure)
                       ? tau
                       : 1.0;
  sol.x = x * (pre.b_scale / t);
  sol.z = z * (pre.c_scale / t);
  sol.y = Eigen::VectorXd::Zero(program.num_rows());
  for (int i = 0; i < m; ++i) sol.y(pre.kept_rows[i]) = y(i) * pre.row_scale(i) * pre.c_scale / t;

  sol.primal_objective = c_orig.dot(sol.x);
  sol.dual_objective = b_orig.dot(sol.y);
  sol.primal_residual = safe_norm(a_orig * sol.x - b_orig);
  Eigen::VectorXd zf = sol.z;
  for (int i : layout.free_idx) zf(i) = 0.0;
  sol.dual_residual = safe_norm(Eigen::VectorXd(a_orig.transpose() * sol.y) + zf - c_orig);
  sol.gap = std::abs(sol.primal_objective - sol.dual_objective) / (1.0 + std::abs(sol.primal_objective));
  if (stopped_early) {
    const double scale = 1.0 + safe_norm(b_orig) + safe_norm(c_orig);
    if (sol.primal_residual <= options.accept_tol * scale && sol.dual_residual <= options.accept_tol * scale &&
        sol.gap <= options.accept_tol) {
      sol.status = SolveStatus::kOptimal;
      sol.message = "accepted best iterate after: " + sol.message;
    }
  }
  (void)is_free;
  return finish(sol);
}

}  // namespace qcgain::sdp
