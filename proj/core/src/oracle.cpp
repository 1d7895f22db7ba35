#include "qcgain/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qcgain/errors.hpp"

namespace qcgain {

double f_ab(const Sector& sector, double x) { return x <= 0.0 ? sector.alpha() * x : sector.beta() * x; }

Eigen::VectorXd F_ab(const Sector& sector, const Eigen::VectorXd& x) {
  return x.unaryExpr([&sector](double v) { return f_ab(sector, v); });
}

IncrementalPair IncrementalPair::from_inputs(const Sector& sector, const Eigen::VectorXd& vbar,
                                             const Eigen::VectorXd& vhat) {
  if (vbar.size() != vhat.size()) throw DimensionMismatch("IncrementalPair: inputs differ in length");
  return {vbar, vhat, F_ab(sector, vbar), F_ab(sector, vhat)};
}

Eigen::VectorXd increments_to_sector(const IncrementalPair& pair, const Sector& sector) {
  const Eigen::Index m = pair.vbar.size();
  Eigen::VectorXd g(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = pair.vbar(i), b = pair.vhat(i);
    if (a == b) {
      g(i) = sector.center();
    } else if (a <= 0.0 && b <= 0.0) {
      g(i) = sector.alpha();
    } else if (a > 0.0 && b > 0.0) {
      g(i) = sector.beta();
    } else {
      const double ratio = (pair.wbar(i) - pair.what(i)) / (a - b);
      g(i) = std::clamp(ratio, sector.alpha(), sector.beta());
    }
  }
  return g;
}

namespace {

void require_sector(const Eigen::VectorXd& v, const Eigen::VectorXd& w, const Sector& sector, double tol,
                    const char* who) {
  if (v.size() != w.size()) throw DimensionMismatch(std::string(who) + ": v and w differ in length");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!sector.contains(v(i), w(i), tol * (1.0 + v(i) * v(i)))) {
      throw SectorViolation(std::string(who) + ": channel " + std::to_string(i) + " is outside the sector");
    }
  }
}

}  // namespace

IncrementalPair sector_to_increments(const Eigen::VectorXd& v, const Eigen::VectorXd& w, const Sector& sector,
                                     double tol) {
  require_sector(v, w, sector, tol, "sector_to_increments");
  const Eigen::Index m = v.size();
  const double a = sector.alpha(), b = sector.beta();
  Eigen::VectorXd vbar(m), vhat(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (a == b) {
      // Any shift works on a line; keep both points away from the kink.
      vbar(i) = 1.0 + v(i);
      vhat(i) = 1.0;
    } else if (v(i) == 0.0) {
      vbar(i) = vhat(i) = 0.0;
    } else {
      const double g = std::clamp(w(i) / v(i), a, b);
      if (v(i) > 0.0) {
        vbar(i) = (g - a) / (b - a) * v(i);
        vhat(i) = (g - b) / (b - a) * v(i);
      } else {
        vbar(i) = (b - g) / (b - a) * v(i);
        vhat(i) = (a - g) / (b - a) * v(i);
      }
    }
  }
  return IncrementalPair::from_inputs(sector, vbar, vhat);
}

double qc_value(const SymMatrix& M, const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  if (v.size() != w.size() || M.size() != 2 * v.size()) throw DimensionMismatch("qc_value: dimension mismatch");
  Eigen::VectorXd z(2 * v.size());
  z << v, w;
  return z.dot(M.dense() * z);
}

Eigen::VectorXd gamma_from_io(const Eigen::VectorXd& v, const Eigen::VectorXd& w, const Sector& sector, double tol) {
  require_sector(v, w, sector, tol, "gamma_from_io");
  Eigen::VectorXd g(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    g(i) = v(i) == 0.0 ? sector.center() : std::clamp(w(i) / v(i), sector.alpha(), sector.beta());
  return g;
}

// ---------------------------------------------------------------------------
// Copositivity by simplicial partition

namespace {

struct Simplex {
  Eigen::MatrixXd V;   // vertices as columns, each on the unit simplex
  Eigen::MatrixXd B;   // V' A V
  Eigen::MatrixXd E2;  // squared edge lengths
};

// Euclidean projection onto {x >= 0, sum x = 1}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& y) {
  std::vector<double> s(y.data(), y.data() + y.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (s[k] - t > 0.0) theta = t;
  }
  return (y.array() - theta).max(0.0).matrix();
}

struct EnvelopeBound {
  double lower;
  Eigen::VectorXd lambda;  // best point found for the true form
  double value;            // lambda' B lambda
};

// Lower bound of l'Bl over the simplex. With B = B+ + B- (eigen split), the
// concave part is bounded below by its vertex interpolation, which leaves a
// convex problem; a Frank-Wolfe gap gives a certified bound from any iterate.
EnvelopeBound envelope_bound(const Eigen::MatrixXd& B, double target) {
  const Eigen::Index n = B.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  const Eigen::VectorXd ev = es.eigenvalues();
  const Eigen::MatrixXd& U = es.eigenvectors();
  const Eigen::MatrixXd P = U * ev.cwiseMax(0.0).asDiagonal() * U.transpose();
  const Eigen::VectorXd d = (U * ev.cwiseMin(0.0).asDiagonal() * U.transpose()).diagonal();
  const double lip = 2.0 * std::max(ev.maxCoeff(), 0.0);

  EnvelopeBound out{-std::numeric_limits<double>::infinity(), Eigen::VectorXd::Constant(n, 1.0 / n), 0.0};
  out.value = out.lambda.dot(B * out.lambda);
  Eigen::VectorXd l = out.lambda;
  const int iters = lip > 0.0 ? 200 : 1;
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd grad = 2.0 * P * l + d;
    const double f = l.dot(P * l) + d.dot(l);
    out.lower = std::max(out.lower, f + grad.minCoeff() - grad.dot(l));
    const double val = l.dot(B * l);
    if (val < out.value) {
      out.value = val;
      out.lambda = l;
    }
    if (out.lower >= target) break;
    if (lip == 0.0) break;
    l = project_simplex(l - grad / lip);
  }
  return out;
}

// With K the rows of B holding a negative entry, x'Bx >= x_K' B_KK x_K on the
// simplex, and that is >= lambda_min(B_KK) |x_K|^2 >= min(lambda_min, 0).
// Exact where the form vanishes inside the cone, where bisection alone stalls.
double negative_block_bound(const Eigen::MatrixXd& B) {
  std::vector<Eigen::Index> k;
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    if (B.row(i).minCoeff() < 0.0) k.push_back(i);
  if (k.empty()) return 0.0;
  Eigen::MatrixXd bkk(k.size(), k.size());
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = 0; j < k.size(); ++j) bkk(i, j) = B(k[i], k[j]);
  return std::min(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(bkk, Eigen::EigenvaluesOnly).eigenvalues()(0), 0.0);
}

enum class NodeVerdict { kCopositive, kWitness, kUndecided };

struct NodeTest {
  NodeVerdict verdict = NodeVerdict::kUndecided;
  Eigen::VectorXd lambda;  // simplex point with lambda' B lambda < -tol, for kWitness
};

// Kaplan's criterion applied to C = B + tol * ones: C is copositive iff no
// principal submatrix has an eigenvector v > 0 with a negative eigenvalue,
// and C is copositive iff l'Bl >= -tol on the simplex. Undecided when a
// negative eigenvalue is clustered, since the computed eigenvectors then do
// not span the eigenspace reliably.
NodeTest kaplan_test(const Eigen::MatrixXd& B, double tol) {
  const int n = static_cast<int>(B.rows());
  NodeTest out;
  if (n > 12) return out;
  const Eigen::MatrixXd C = B.array() + tol;
  bool ambiguous = false;
  std::vector<int> idx;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    idx.clear();
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = C(idx[i], idx[j]);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    const Eigen::VectorXd& ev = es.eigenvalues();
    for (Eigen::Index e = 0; e < k && ev(e) < 0.0; ++e) {
      Eigen::VectorXd u = es.eigenvectors().col(e);
      if (u.sum() < 0.0) u = -u;
      const double gap = std::min(e > 0 ? ev(e) - ev(e - 1) : INFINITY, e + 1 < k ? ev(e + 1) - ev(e) : INFINITY);
      if (gap <= 1e-9 * (1.0 + std::abs(ev(e)))) ambiguous = true;
      if (u.minCoeff() <= 0.0) continue;
      Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < k; ++i) lambda(idx[i]) = u(i);
      lambda /= lambda.sum();
      if (lambda.dot(B * lambda) < -tol) {
        out.verdict = NodeVerdict::kWitness;
        out.lambda = lambda;
        return out;
      }
      ambiguous = true;
    }
  }
  if (!ambiguous) out.verdict = NodeVerdict::kCopositive;
  return out;
}

}  // namespace

CopositivityResult copositive_bruteforce(const SymMatrix& A, const BruteForceOptions& options) {
  const int n = A.size();
  CopositivityResult res;
  res.tolerance = options.rel_tol * (1.0 + A.frobenius_norm());
  if (n == 0) return res;
  const double tol = res.tolerance;
  const Eigen::MatrixXd a = A.dense();

  auto found = [&](const Eigen::VectorXd& x) {
    res.verdict = CopositivityVerdict::kNotCopositive;
    res.witness = x;
    res.witness_value = x.dot(a * x);
    return res;
  };

  std::vector<Simplex> stack;
  {
    Simplex root{Eigen::MatrixXd::Identity(n, n), a, Eigen::MatrixXd::Constant(n, n, 2.0)};
    root.E2.diagonal().setZero();
    stack.push_back(std::move(root));
  }
  while (!stack.empty()) {
    if (res.subsimplices >= options.max_subsimplices) {
      res.verdict = CopositivityVerdict::kIndeterminate;
      return res;
    }
    Simplex s = std::move(stack.back());
    stack.pop_back();
    ++res.subsimplices;

    Eigen::Index imin = 0;
    const double vmin = s.B.diagonal().minCoeff(&imin);
    if (vmin < -tol) return found(s.V.col(imin));
    if (s.B.minCoeff() >= -tol) continue;
    if (negative_block_bound(s.B) >= -tol) continue;
    const NodeTest exact = kaplan_test(s.B, tol);
    if (exact.verdict == NodeVerdict::kCopositive) continue;
    if (exact.verdict == NodeVerdict::kWitness) return found(s.V * exact.lambda);

    const EnvelopeBound env = envelope_bound(s.B, -tol);
    if (env.value < -tol) return found(s.V * env.lambda);
    if (env.lower >= -tol) continue;

    // Bisect the longest edge.
    Eigen::Index p = 0, q = 0;
    s.E2.maxCoeff(&p, &q);
    const Eigen::VectorXd u = 0.5 * (s.V.col(p) + s.V.col(q));
    const Eigen::VectorXd bu = 0.5 * (s.B.col(p) + s.B.col(q));
    const double buu = 0.25 * (s.B(p, p) + 2.0 * s.B(p, q) + s.B(q, q));
    const Eigen::VectorXd eu = 0.5 * (s.E2.col(p) + s.E2.col(q)) - Eigen::VectorXd::Constant(n, 0.25 * s.E2(p, q));

    auto child = [&](Eigen::Index replaced) {
      Simplex c = s;
      c.V.col(replaced) = u;
      c.B.col(replaced) = bu;
      c.B.row(replaced) = bu.transpose();
      c.B(replaced, replaced) = buu;
      c.E2.col(replaced) = eu;
      c.E2.row(replaced) = eu.transpose();
      c.E2(replaced, replaced) = 0.0;
      return c;
    };
    Simplex c1 = child(q), c2 = child(p);
    if (buu < -tol) return found(u);
    // Explore the child with the lower entrywise bound first.
    if (c1.B.minCoeff() < c2.B.minCoeff()) std::swap(c1, c2);
    stack.push_back(std::move(c1));
    stack.push_back(std::move(c2));
  }
  return res;
}

PsdPlusNResult copositive_psd_plus_n(const SymMatrix& A, double rel_tol) {
  const int n = A.size();
  PsdPlusNResult out;
  out.S = SymMatrix(n);
  out.N = SymMatrix(n);
  if (n == 0) {
    out.decomposable = true;
    return out;
  }
  sdp::ConeProgram prog;
  const int s = prog.add_psd(n, "S");
  // N with zero diagonal loses nothing: its diagonal can join S.
  const int nn = n > 1 ? prog.add_nonneg(n * (n - 1) / 2, "N") : -1;
  const int t = prog.add_free(1, "t");
  prog.set_cost(t, 0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int row = prog.add_row(A(i, j));
      prog.add_psd_term(row, s, i, j, 1.0);
      if (i != j) prog.add_term(row, nn, static_cast<int>(offdiag_index(n, i, j)), 1.0);
      if (i == j) prog.add_term(row, t, 0, -1.0);
    }
  }
  const sdp::Solution sol = sdp::solve(prog);
  out.status = sol.status;
  if (sol.status != sdp::SolveStatus::kOptimal) {
    throw SolverFailure("copositive_psd_plus_n: solver ended with status " + std::string(sdp::to_string(sol.status)));
  }
  out.t_star = sol.x(prog.block(t).offset);
  out.decomposable = out.t_star <= rel_tol * (1.0 + A.frobenius_norm());
  out.S = prog.psd_value(sol.x, s) - out.t_star * SymMatrix::identity(n);
  if (nn >= 0) out.N = offdiag_matrix(n, prog.vector_value(sol.x, nn).data());
  return out;
}

// ---------------------------------------------------------------------------
// Counterexample constructions

double PiecewiseLinearMap::operator()(double x) const {
  const auto& pts = points;
  if (x <= pts.front().first) return slope_left * x;
  if (x >= pts.back().first) return slope_right * x;
  const auto hi = std::upper_bound(pts.begin(), pts.end(), x,
                                   [](double v, const std::pair<double, double>& p) { return v < p.first; });
  const auto lo = hi - 1;
  const double t = (x - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

RepeatedCounterexample repeated_counterexample(const SymMatrix& M, const Sector& sector, const Eigen::VectorXd& gamma,
                                               const Eigen::VectorXd& vbar) {
  const Eigen::Index m = vbar.size();
  if (gamma.size() != m || M.size() != 2 * m) throw DimensionMismatch("repeated_counterexample: dimension mismatch");
  for (Eigen::Index i = 0; i < m; ++i)
    if (!sector.contains_slope(gamma(i))) throw OutOfSector("repeated_counterexample: slope outside the sector");
  const double q0 = qc_value(M, vbar, gamma.cwiseProduct(vbar));
  if (!(q0 < 0.0)) throw WitnessNotStrict("repeated_counterexample: witness QC value is not negative");

  // Separate entries that share an input but need different outputs.
  Eigen::VectorXd v = vbar;
  const double scale = std::max(vbar.norm(), 1e-300);
  const double delta = 1e-6 * scale / static_cast<double>(m + 1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return vbar(a) < vbar(b); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Eigen::Index cur = order[k];
    std::size_t first = k;
    while (first > 0 && vbar(order[first - 1]) == vbar(cur)) --first;
    if (first == k) continue;
    bool conflict = false;
    for (std::size_t j = first; j < k; ++j) conflict = conflict || gamma(order[j]) != gamma(cur);
    if (conflict && vbar(cur) != 0.0) v(cur) = vbar(cur) + static_cast<double>(k - first) * delta;
  }

  RepeatedCounterexample out;
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (Eigen::Index i = 0; i < m; ++i)
    if (v(i) != 0.0) pts.emplace_back(v(i), gamma(i) * v(i));
  std::sort(pts.begin(), pts.end());
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (pts[k].first == pts[k - 1].first && pts[k].second != pts[k - 1].second) {
      throw WitnessNotStrict("repeated_counterexample: could not separate duplicate inputs");
    }
  }
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  out.phi.points = pts;
  // Extension slopes for sides that carry no breakpoint.
  out.phi.slope_left = pts.front().first < 0.0 ? pts.front().second / pts.front().first : sector.center();
  out.phi.slope_right = pts.back().first > 0.0 ? pts.back().second / pts.back().first : sector.center();
  out.vbar = v;
  out.wbar = v.unaryExpr([&out](double x) { return out.phi(x); });
  out.qc = qc_value(M, out.vbar, out.wbar);
  if (!(out.qc < 0.0)) throw WitnessNotStrict("repeated_counterexample: perturbation destroyed strictness");
  return out;
}

IncrementalPair witness_to_increment(const Sector& sector, const SignPattern& gbar, const SignPattern& ghat,
                                     const Eigen::VectorXd& x) {
  const int m = gbar.size();
  if (ghat.size() != m || x.size() != 2 * m) throw DimensionMismatch("witness_to_increment: dimension mismatch");
  if ((x.array() < 0.0).any()) throw Error("witness_to_increment: x must be nonnegative");
  const Eigen::VectorXd vbar = gbar.as_vector().cwiseProduct(x.head(m));
  const Eigen::VectorXd vhat = ghat.as_vector().cwiseProduct(x.tail(m));
  return IncrementalPair::from_inputs(sector, vbar, vhat);
}

}  // namespace qcgain
