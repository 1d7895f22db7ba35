#pragma once

#include <string>
#include <vector>

#include "qcgain/multipliers.hpp"
#include "qcgain/sdp.hpp"
#include "qcgain/sym_matrix.hpp"
#include "qcgain/system.hpp"

namespace qcgain {

struct AnalysisProblem {
  AnalysisProblem(StateSpace sys, MultiplierClass mclass, double eps = 0.0, sdp::SolverOptions solver = {});

  StateSpace sys;
  MultiplierClass mclass;
  double eps;  // strictness margin; 0 selects 1e-7 (1 + ||data||)
  sdp::SolverOptions solver;

  const Sector& sector() const { return mclass.sector; }
};

double default_eps(const StateSpace& sys, const Sector& sector);

/// [A'PA - P, A'PB1, A'PB2; . B1'PB1 .; . . B2'PB2 - g2 I]
///   + [C2 D21 D22]' [C2 D21 D22] + W' M W,  W = [C1 D11 D12; 0 I 0].
SymMatrix assemble_L(const StateSpace& sys, const SymMatrix& P, const SymMatrix& M, double gamma_sq);

/// Block names in the generated program.
namespace block_names {
inline constexpr const char* kP = "P";
inline constexpr const char* kGammaSq = "gamma_sq";
inline constexpr const char* kLSlack = "neg_L";
inline constexpr const char* kLambda = "lambda";
inline constexpr const char* kM = "M";
inline constexpr const char* kRSlack = "neg_R";
inline constexpr const char* kVertex = "vertex_";
inline constexpr const char* kS = "S_";
inline constexpr const char* kN = "N_";
}  // namespace block_names

/// minimize gamma^2 s.t. P >= 0, -L(P, M, gamma^2) - eps I >= 0, M in class.
sdp::ConeProgram build_program(const AnalysisProblem& prob);

enum class AnalysisStatus {
  kCertified,           // solver optimal and certificate verified
  kNoCertificate,       // class infeasible at this sector
  kVerificationFailed,  // solver optimal but the certificate did not check out
  kSolverFailure,       // iteration limit or numerical breakdown
};

std::string_view to_string(AnalysisStatus s);

struct AnalysisResult {
  MultiplierTag tag = MultiplierTag::kDiagonal;
  Sector sector{0.0, 0.0};
  AnalysisStatus status = AnalysisStatus::kSolverFailure;
  sdp::SolveStatus solver_status = sdp::SolveStatus::kNumericalFailure;
  double gamma = 0.0;
  double gamma_sq = 0.0;
  SymMatrix P;
  SymMatrix M;
  double eps = 0.0;
  double max_eig_L = 0.0;  // of assemble_L at the certificate
  int iterations = 0;
  double runtime_seconds = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  bool well_posedness_warning = false;
  std::string message;

  bool certified() const { return status == AnalysisStatus::kCertified; }
};

AnalysisResult analyze(const AnalysisProblem& prob);

/// Largest beta (sector [0, beta]) in [0, beta_max] with a certificate,
/// located by bisection to `resolution`.
double margin_search(const StateSpace& sys, MultiplierTag tag, double beta_max, double resolution, double eps = 0.0,
                     const sdp::SolverOptions& solver = {});

/// A multiplier of the class minimizing <C, M> over the class intersected
/// with the box -I <= M <= I. Used to draw random class members.
SymMatrix extremal_multiplier(const MultiplierClass& mclass, const SymMatrix& C);

}  // namespace qcgain
