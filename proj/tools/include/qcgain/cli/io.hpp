#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcgain/multipliers.hpp"
#include "qcgain/sym_matrix.hpp"
#include "qcgain/system.hpp"

namespace qcgain::cli {

enum class Command { kAnalyze, kSweep, kMargin, kNorm, kVerify };

struct SweepGrid {
  double beta_min = 0.0;
  double beta_max = 0.0;
  int count = 2;

  std::vector<double> points() const;
};

struct RunConfig {
  Command command = Command::kAnalyze;
  std::string system_path;
  double alpha = 0.0;
  double beta = 1.0;
  std::optional<SweepGrid> sweep;
  std::vector<MultiplierTag> classes{MultiplierTag::kDiagonal, MultiplierTag::kVertexConvex,
                                     MultiplierTag::kIncrementalComplete};
  std::string out_path;
  std::string dump_prefix;  // analyze: write each cone program to <prefix><class>.txt
  std::uint64_t seed = 1;
  double eps = 0.0;           // 0 selects the library default
  double resolution = 0.01;   // margin search
  double beta_max = 2.0;      // margin search upper end
  CopositivityMode mode = CopositivityMode::kBruteForce;
  int jobs = 0;               // 0: hardware concurrency
  bool deterministic = false; // zero the runtime columns
  std::string mutant_path;    // verify: multiplier claimed to be in Minc

  /// Throws ParseError when an invariant of the chosen command is violated.
  void validate() const;
};

/// System JSON: keys "A","B1","B2","C1","C2","D11","D12","D21","D22", each a
/// row-major array of arrays of numbers.
StateSpace parse_system_json(std::string_view text, const std::string& source = "<input>");
StateSpace parse_system_file(const std::string& path);

/// "MIN:MAX:COUNT".
SweepGrid parse_sweep_grid(std::string_view spec);

/// "md", "mc", "minc" or "all"; comma-separated lists are accepted.
std::vector<MultiplierTag> parse_classes(std::string_view spec);

struct Mutant {
  SymMatrix M;
  Sector sector{0.0, 1.0};
};

/// {"M": [[...]], "alpha": a, "beta": b}.
Mutant parse_mutant_file(const std::string& path);

/// Six significant digits, as used in every CSV cell.
std::string format_number(double value);

}  // namespace qcgain::cli
