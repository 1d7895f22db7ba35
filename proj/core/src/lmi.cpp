#include "qcgain/lmi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "qcgain/errors.hpp"

namespace qcgain {

AnalysisProblem::AnalysisProblem(StateSpace s, MultiplierClass mc, double e, sdp::SolverOptions opts)
    : sys(std::move(s)), mclass(mc), eps(e), solver(opts) {
  if (sys.m() != mclass.m) {
    throw DimensionMismatch("AnalysisProblem: system has " + std::to_string(sys.m()) + " channels, class has " +
                            std::to_string(mclass.m));
  }
  if (eps < 0.0 || !std::isfinite(eps)) throw Error("AnalysisProblem: eps must be a nonnegative number");
  if (eps == 0.0) eps = default_eps(sys, mclass.sector);
}

double default_eps(const StateSpace& sys, const Sector&) { return 1e-7 * (1.0 + sys.data_norm()); }

std::string_view to_string(AnalysisStatus s) {
  switch (s) {
    case AnalysisStatus::kCertified: return "OPTIMAL";
    case AnalysisStatus::kNoCertificate: return "INFEASIBLE";
    case AnalysisStatus::kVerificationFailed: return "UNVERIFIED";
    case AnalysisStatus::kSolverFailure: return "SOLVER_FAILURE";
  }
  return "UNKNOWN";
}

namespace {

Eigen::MatrixXd performance_weight(const StateSpace& sys) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2 * sys.m(), sys.nx() + sys.m() + sys.nu());
  w.topRows(sys.m()) << sys.C1(), sys.D11(), sys.D12();
  w.bottomRows(sys.m()).middleCols(sys.nx(), sys.m()).setIdentity();
  return w;
}

}  // namespace

SymMatrix assemble_L(const StateSpace& sys, const SymMatrix& P, const SymMatrix& M, double gamma_sq) {
  const int nx = sys.nx(), m = sys.m(), nu = sys.nu(), n = nx + m + nu;
  if (P.size() != nx) throw DimensionMismatch("assemble_L: P must be nx x nx");
  if (M.size() != 2 * m) throw DimensionMismatch("assemble_L: M must be 2m x 2m");
  Eigen::MatrixXd ab(nx, n);
  ab << sys.A(), sys.B1(), sys.B2();
  Eigen::MatrixXd cy(sys.ny(), n);
  cy << sys.C2(), sys.D21(), sys.D22();
  const Eigen::MatrixXd w = performance_weight(sys);
  const Eigen::MatrixXd p = P.dense();

  Eigen::MatrixXd l = ab.transpose() * p * ab;
  l.topLeftCorner(nx, nx) -= p;
  l.bottomRightCorner(nu, nu).diagonal().array() -= gamma_sq;
  l += cy.transpose() * cy;
  l += w.transpose() * M.dense() * w;
  return SymMatrix::symmetrized(l);
}

namespace {

struct Term {
  int block;
  int index;
  double coef;
};
using Expr = std::vector<Term>;

// Entries of M as linear expressions in program scalars.
struct MultiplierVars {
  int dim = 0;
  std::vector<Expr> entries;  // packed upper triangle
  int lambda_block = -1;
  int m_block = -1;
  std::vector<int> vertex_blocks;
  int r_slack_block = -1;
  std::vector<int> s_blocks, n_blocks;

  const Expr& at(int i, int j) const { return entries[packed_index(dim, i, j)]; }
};

void add_expr(sdp::ConeProgram& prog, int row, const Expr& e, double scale) {
  for (const Term& t : e) prog.add_term(row, t.block, t.index, scale * t.coef);
}

// Adds entry (i, j) of T' M T to `row`.
void add_congruence(sdp::ConeProgram& prog, int row, const MultiplierVars& mv, const Eigen::MatrixXd& t, int i,
                    int j) {
  for (int k = 0; k < mv.dim; ++k) {
    for (int l = k; l < mv.dim; ++l) {
      double coef = t(k, i) * t(l, j);
      if (k != l) coef += t(l, i) * t(k, j);
      if (coef != 0.0) add_expr(prog, row, mv.at(k, l), coef);
    }
  }
}

MultiplierVars add_multiplier(sdp::ConeProgram& prog, const MultiplierClass& mc, double eps) {
  const int m = mc.m, dim = 2 * m;
  const Sector& sec = mc.sector;
  MultiplierVars mv;
  mv.dim = dim;
  mv.entries.resize(static_cast<std::size_t>(dim) * (dim + 1) / 2);

  if (mc.tag == MultiplierTag::kDiagonal) {
    mv.lambda_block = prog.add_nonneg(m, block_names::kLambda);
    for (int i = 0; i < m; ++i) {
      mv.entries[packed_index(dim, i, i)].push_back({mv.lambda_block, i, -2.0 * sec.alpha() * sec.beta()});
      mv.entries[packed_index(dim, i, m + i)].push_back({mv.lambda_block, i, sec.alpha() + sec.beta()});
      mv.entries[packed_index(dim, m + i, m + i)].push_back({mv.lambda_block, i, -2.0});
    }
    return mv;
  }

  mv.m_block = prog.add_free(static_cast<int>(mv.entries.size()), block_names::kM);
  for (int k = 0; k < static_cast<int>(mv.entries.size()); ++k) mv.entries[static_cast<std::size_t>(k)].push_back({mv.m_block, k, 1.0});

  if (mc.tag == MultiplierTag::kVertexConvex) {
    // R + neg_R = -eps I
    mv.r_slack_block = prog.add_psd(m, block_names::kRSlack);
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) {
        const int row = prog.add_row(i == j ? -eps : 0.0);
        add_expr(prog, row, mv.at(m + i, m + j), 1.0);
        prog.add_psd_term(row, mv.r_slack_block, i, j, 1.0);
      }
    }
    // h_M(vertex) - V = 0
    const auto vertices = vertex_gammas(sec, m);
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      const int blk = prog.add_psd(m, block_names::kVertex + std::to_string(v));
      mv.vertex_blocks.push_back(blk);
      Eigen::MatrixXd t(dim, m);
      t << Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd(vertices[v].asDiagonal());
      for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
          const int row = prog.add_row(0.0);
          add_congruence(prog, row, mv, t, i, j);
          prog.add_psd_term(row, blk, i, j, -1.0);
        }
      }
    }
    return mv;
  }

  // g_M(gbar, ghat) - S_k - N_k = 0 for every sign pair. N_k has a zero
  // diagonal; a nonnegative diagonal can always be moved into S_k.
  const auto pairs = sign_pairs(m);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const int sb = prog.add_psd(dim, block_names::kS + std::to_string(k));
    const int nb = prog.add_nonneg(dim * (dim - 1) / 2, block_names::kN + std::to_string(k));
    mv.s_blocks.push_back(sb);
    mv.n_blocks.push_back(nb);
    const Eigen::MatrixXd t = gm_transform(sec, pairs[k].first, pairs[k].second);
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) {
        const int row = prog.add_row(0.0);
        add_congruence(prog, row, mv, t, i, j);
        prog.add_psd_term(row, sb, i, j, -1.0);
        if (i != j) prog.add_term(row, nb, static_cast<int>(offdiag_index(dim, i, j)), -1.0);
      }
    }
  }
  return mv;
}

SymMatrix multiplier_value(const sdp::ConeProgram& prog, const MultiplierVars& mv, const Eigen::VectorXd& x) {
  SymMatrix M(mv.dim);
  for (int i = 0; i < mv.dim; ++i) {
    for (int j = i; j < mv.dim; ++j) {
      double v = 0.0;
      for (const Term& t : mv.at(i, j)) v += t.coef * x(prog.block(t.block).offset + t.index);
      M.set(i, j, v);
    }
  }
  return M;
}

sdp::ConeProgram build_with_vars(const AnalysisProblem& prob, MultiplierVars& mv) {
  const StateSpace& sys = prob.sys;
  const int nx = sys.nx(), m = sys.m(), nu = sys.nu(), n = nx + m + nu;
  Eigen::MatrixXd ab(nx, n);
  ab << sys.A(), sys.B1(), sys.B2();
  Eigen::MatrixXd cy(sys.ny(), n);
  cy << sys.C2(), sys.D21(), sys.D22();
  const Eigen::MatrixXd constant = cy.transpose() * cy;
  const Eigen::MatrixXd w = performance_weight(sys);

  sdp::ConeProgram prog;
  const int p = nx > 0 ? prog.add_psd(nx, block_names::kP) : -1;
  const int g2 = prog.add_nonneg(1, block_names::kGammaSq);
  const int ls = prog.add_psd(n, block_names::kLSlack);
  prog.set_cost(g2, 0, 1.0);
  mv = add_multiplier(prog, prob.mclass, prob.eps);

  // neg_L + L(P, M, g2) = -eps I - Cy'Cy
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int row = prog.add_row((i == j ? -prob.eps : 0.0) - constant(i, j));
      prog.add_psd_term(row, ls, i, j, 1.0);
      for (int k = 0; k < nx; ++k) {
        for (int l = k; l < nx; ++l) {
          double coef = ab(k, i) * ab(l, j);
          if (k != l) coef += ab(l, i) * ab(k, j);
          if (i == k && j == l) coef -= 1.0;
          if (coef != 0.0) prog.add_psd_term(row, p, k, l, coef);
        }
      }
      if (i == j && i >= nx + m) prog.add_term(row, g2, 0, -1.0);
      add_congruence(prog, row, mv, w, i, j);
    }
  }
  return prog;
}

}  // namespace

sdp::ConeProgram build_program(const AnalysisProblem& prob) {
  MultiplierVars mv;
  return build_with_vars(prob, mv);
}

namespace {

// Checks the PSD + N certificates returned with an IncrementalComplete solve.
bool minc_certificate_holds(const sdp::ConeProgram& prog, const MultiplierVars& mv, const Eigen::VectorXd& x,
                            const SymMatrix& M, const Sector& sector, std::string& why) {
  const int dim = mv.dim;
  const auto pairs = sign_pairs(dim / 2);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const SymMatrix g = g_m(M, sector, pairs[k].first, pairs[k].second);
    const SymMatrix s = prog.psd_value(x, mv.s_blocks[k]);
    const Eigen::VectorXd nv = prog.vector_value(x, mv.n_blocks[k]);
    const SymMatrix nm = offdiag_matrix(dim, nv.data());
    const double scale = 1.0 + g.frobenius_norm();
    const double resid = (g - s - nm).frobenius_norm();
    if (resid > 1e-8 * scale || !s.is_psd(1e-8) || (nv.size() > 0 && nv.minCoeff() < -1e-8 * scale)) {
      why = "decomposition " + std::to_string(k) + " residual " + std::to_string(resid);
      return false;
    }
  }
  return true;
}

}  // namespace

AnalysisResult analyze(const AnalysisProblem& prob) {
  const auto t0 = std::chrono::steady_clock::now();
  AnalysisResult res;
  res.tag = prob.mclass.tag;
  res.sector = prob.sector();
  res.eps = prob.eps;
  res.well_posedness_warning = prob.sys.well_posedness_warning();

  MultiplierVars mv;
  const sdp::ConeProgram prog = build_with_vars(prob, mv);
  const sdp::Solution sol = sdp::solve(prog, prob.solver);
  res.solver_status = sol.status;
  res.iterations = sol.iterations;
  res.primal_residual = sol.primal_residual;
  res.dual_residual = sol.dual_residual;
  res.gap = sol.gap;
  res.message = sol.message;
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  // A stalled solve still carries its best iterate; it is accepted only if
  // the certificate checks below pass.
  const bool stalled = (sol.status == sdp::SolveStatus::kMaxIterations ||
                        sol.status == sdp::SolveStatus::kNumericalFailure) &&
                       sol.x.size() == prog.num_vars() && sol.x.allFinite();
  switch (sol.status) {
    case sdp::SolveStatus::kOptimal: break;
    case sdp::SolveStatus::kMaxIterations:
    case sdp::SolveStatus::kNumericalFailure:
      if (stalled) break;
      [[fallthrough]];
    case sdp::SolveStatus::kPrimalInfeasible:
      res.status = AnalysisStatus::kNoCertificate;
      res.message = "no certificate in class " + std::string(to_string(prob.mclass.tag)) + " for sector [" +
                    std::to_string(res.sector.alpha()) + ", " + std::to_string(res.sector.beta()) + "]";
      res.runtime_seconds = elapsed();
      return res;
    default:
      res.status = AnalysisStatus::kSolverFailure;
      if (res.message.empty()) res.message = "solver status " + std::string(sdp::to_string(sol.status));
      res.runtime_seconds = elapsed();
      return res;
  }

  const auto g2 = prog.find_block(block_names::kGammaSq);
  res.gamma_sq = std::max(0.0, sol.x(prog.block(*g2).offset));
  res.gamma = std::sqrt(res.gamma_sq);
  if (const auto p = prog.find_block(block_names::kP))
    res.P = prog.psd_value(sol.x, *p);
  else
    res.P = SymMatrix(0);
  if (mv.lambda_block >= 0) {
    const Eigen::VectorXd lambda = prog.vector_value(sol.x, mv.lambda_block).cwiseMax(0.0);
    res.M = md_matrix(lambda, prob.sector());
  } else {
    res.M = multiplier_value(prog, mv, sol.x);
  }

  // Certificate checks independent of the solver's own residuals.
  const SymMatrix L = assemble_L(prob.sys, res.P, res.M, res.gamma_sq);
  res.max_eig_L = L.max_eigenvalue();
  std::string why;
  bool ok = true;
  if (res.max_eig_L > -0.5 * prob.eps) {
    ok = false;
    why = "lambda_max(L) = " + std::to_string(res.max_eig_L);
  } else if (!res.P.is_psd(1e-8)) {
    ok = false;
    why = "P is not PSD";
  } else {
    switch (prob.mclass.tag) {
      case MultiplierTag::kDiagonal:
        ok = membership_md(res.M, prob.sector());
        if (!ok) why = "M does not match the diagonal template";
        break;
      case MultiplierTag::kVertexConvex:
        ok = membership_mc(res.M, prob.sector(), std::min(1e-8, 0.5 * prob.eps));
        if (!ok) why = "M fails the vertex conditions";
        break;
      case MultiplierTag::kIncrementalComplete:
        ok = minc_certificate_holds(prog, mv, sol.x, res.M, prob.sector(), why) ||
             check_minc(res.M, prob.sector(), CopositivityMode::kPsdPlusN).verdict == Verdict::kMember;
        break;
    }
  }
  if (ok) {
    res.status = AnalysisStatus::kCertified;
    if (stalled) res.message = "certificate verified at the best iterate (" + sol.message + ")";
  } else if (stalled) {
    res.status = AnalysisStatus::kSolverFailure;
    res.message = sol.message + "; best iterate fails the certificate check: " + why;
  } else {
    res.status = AnalysisStatus::kVerificationFailed;
    res.message = "certificate check failed: " + why;
  }
  res.runtime_seconds = elapsed();
  return res;
}

double margin_search(const StateSpace& sys, MultiplierTag tag, double beta_max, double resolution, double eps,
                     const sdp::SolverOptions& solver) {
  if (!(resolution > 0.0)) throw Error("margin_search: resolution must be positive");
  if (!(beta_max >= 0.0)) throw Error("margin_search: beta_max must be nonnegative");
  auto feasible = [&](double beta) {
    const AnalysisProblem prob(sys, MultiplierClass(tag, Sector(0.0, beta), sys.m()), eps, solver);
    return analyze(prob).certified();
  };
  if (feasible(beta_max)) return beta_max;
  double lo = 0.0, hi = beta_max;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

SymMatrix extremal_multiplier(const MultiplierClass& mclass, const SymMatrix& C) {
  const int dim = 2 * mclass.m;
  if (C.size() != dim) throw DimensionMismatch("extremal_multiplier: C must be 2m x 2m");
  sdp::ConeProgram prog;
  const MultiplierVars mv = add_multiplier(prog, mclass, 1e-6);
  // I - M >= 0 and I + M >= 0
  const int upper = prog.add_psd(dim, "box_upper");
  const int lower = prog.add_psd(dim, "box_lower");
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const double id = i == j ? 1.0 : 0.0;
      int row = prog.add_row(id);
      add_expr(prog, row, mv.at(i, j), 1.0);
      prog.add_psd_term(row, upper, i, j, 1.0);
      row = prog.add_row(-id);
      add_expr(prog, row, mv.at(i, j), 1.0);
      prog.add_psd_term(row, lower, i, j, -1.0);
    }
  }
  std::map<std::pair<int, int>, double> cost;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      for (const Term& t : mv.at(i, j)) cost[{t.block, t.index}] += (i == j ? 1.0 : 2.0) * C(i, j) * t.coef;
  for (const auto& [key, v] : cost) prog.set_cost(key.first, key.second, v);

  const sdp::Solution sol = sdp::solve(prog);
  if (sol.status != sdp::SolveStatus::kOptimal) {
    throw SolverFailure("extremal_multiplier: solver ended with status " + std::string(sdp::to_string(sol.status)));
  }
  if (mv.lambda_block >= 0) return md_matrix(prog.vector_value(sol.x, mv.lambda_block).cwiseMax(0.0), mclass.sector);
  return multiplier_value(prog, mv, sol.x);
}

}  // namespace qcgain
