#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "qcgain/cli/io.hpp"
#include "qcgain/lmi.hpp"

namespace qcgain::cli {

inline constexpr const char* kSweepHeader =
    "beta,gamma_md,gamma_mc,gamma_minc,status_md,status_mc,status_minc,time_md_s,time_mc_s,time_minc_s";

struct SweepCell {
  bool has_gamma = false;
  double gamma = 0.0;
  std::string status;  // OPTIMAL, INFEASIBLE, UNVERIFIED, SOLVER_FAILURE, NOMINAL or SKIPPED
  double seconds = 0.0;
};

struct SweepRow {
  double beta = 0.0;
  std::array<SweepCell, 3> cells;  // md, mc, minc
};

/// One row per grid point, in grid order. A [0, 0] sector reports the nominal
/// norm in every gamma column. Failures are recorded per cell; the run goes on.
std::vector<SweepRow> run_sweep(const StateSpace& sys, const RunConfig& config);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool deterministic);

/// Certified gamma of one class at one sector, or the failure status.
SweepCell analyze_cell(const StateSpace& sys, MultiplierTag tag, const Sector& sector, double eps);

}  // namespace qcgain::cli
