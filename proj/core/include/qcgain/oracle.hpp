#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcgain/multipliers.hpp"
#include "qcgain/sdp.hpp"
#include "qcgain/sym_matrix.hpp"
#include "qcgain/system.hpp"

namespace qcgain {

/// alpha x for x <= 0, beta x for x > 0.
double f_ab(const Sector& sector, double x);
Eigen::VectorXd F_ab(const Sector& sector, const Eigen::VectorXd& x);

/// Two input/output pairs of F_ab and their difference.
struct IncrementalPair {
  Eigen::VectorXd vbar, vhat, wbar, what;

  static IncrementalPair from_inputs(const Sector& sector, const Eigen::VectorXd& vbar, const Eigen::VectorXd& vhat);
  Eigen::VectorXd dv() const { return vbar - vhat; }
  Eigen::VectorXd dw() const { return wbar - what; }
};

/// Per-channel slopes g with dw = diag(g) dv; g_i = c where dv_i = 0.
Eigen::VectorXd increments_to_sector(const IncrementalPair& pair, const Sector& sector);

/// An increment of F_ab equal to (v, w). Throws SectorViolation if (v, w) is
/// outside the sector by more than `tol` (scaled by 1 + v_i^2).
IncrementalPair sector_to_increments(const Eigen::VectorXd& v, const Eigen::VectorXd& w, const Sector& sector,
                                     double tol = 1e-9);

/// [v; w]' M [v; w].
double qc_value(const SymMatrix& M, const Eigen::VectorXd& v, const Eigen::VectorXd& w);

/// diag(G) with w = G v: w_i / v_i, or c where v_i = 0.
Eigen::VectorXd gamma_from_io(const Eigen::VectorXd& v, const Eigen::VectorXd& w, const Sector& sector,
                              double tol = 1e-9);

enum class CopositivityVerdict { kCopositive, kNotCopositive, kIndeterminate };

struct BruteForceOptions {
  double rel_tol = 1e-8;                 // tol = rel_tol * (1 + ||A||_F)
  std::size_t max_subsimplices = 1000000;
};

struct CopositivityResult {
  CopositivityVerdict verdict = CopositivityVerdict::kCopositive;
  Eigen::VectorXd witness;     // on the unit simplex; set for kNotCopositive
  double witness_value = 0.0;  // witness' A witness
  double tolerance = 0.0;
  std::size_t subsimplices = 0;
};

/// Minimizes x'Ax over the unit simplex by depth-first simplicial bisection.
CopositivityResult copositive_bruteforce(const SymMatrix& A, const BruteForceOptions& options = {});

struct PsdPlusNResult {
  bool decomposable = false;
  double t_star = 0.0;  // min t with A + tI = S + N
  SymMatrix S, N;
  sdp::SolveStatus status = sdp::SolveStatus::kOptimal;
};

/// A = S + N with S PSD and N symmetric entrywise nonnegative, via an SDP.
PsdPlusNResult copositive_psd_plus_n(const SymMatrix& A, double rel_tol = 1e-8);

/// Scalar piecewise-linear map through the origin given by its breakpoints;
/// extended beyond the outermost points along the ray through the origin.
struct PiecewiseLinearMap {
  std::vector<std::pair<double, double>> points;  // sorted by x, includes (0, 0)
  double slope_left = 0.0;   // used left of the first point
  double slope_right = 0.0;  // used right of the last point

  double operator()(double x) const;
};

struct RepeatedCounterexample {
  PiecewiseLinearMap phi;
  Eigen::VectorXd vbar;  // possibly perturbed witness input
  Eigen::VectorXd wbar;  // phi applied to every entry of vbar
  double qc = 0.0;       // qc_value(M, vbar, wbar) < 0
};

/// Single scalar map phi in the sector whose repeated form violates the QC
/// defined by M at (vbar, diag(gamma) vbar). Duplicate entries of vbar are
/// separated by at most 1e-6 ||vbar||. Throws WitnessNotStrict if the
/// witness (or its perturbation) does not give a negative QC value.
RepeatedCounterexample repeated_counterexample(const SymMatrix& M, const Sector& sector, const Eigen::VectorXd& gamma,
                                               const Eigen::VectorXd& vbar);

/// Maps x = (a, b) >= 0 to the increment of F_ab with vbar = gbar a and
/// vhat = ghat b, so that [dv; dw] = gm_transform(...) x.
IncrementalPair witness_to_increment(const Sector& sector, const SignPattern& gbar, const SignPattern& ghat,
                                     const Eigen::VectorXd& x);

}  // namespace qcgain
