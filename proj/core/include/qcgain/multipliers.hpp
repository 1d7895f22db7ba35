#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcgain/sym_matrix.hpp"
#include "qcgain/system.hpp"

namespace qcgain {

/// Diagonal sign matrix diag(d), d_i in {-1, +1}.
class SignPattern {
 public:
  explicit SignPattern(std::vector<int> d);
  /// Bit k of `bits` (most significant first) set means +1.
  static SignPattern from_bits(int m, std::uint64_t bits);

  int size() const { return static_cast<int>(d_.size()); }
  int operator[](int i) const { return d_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& entries() const { return d_; }
  Eigen::VectorXd as_vector() const;

  friend bool operator==(const SignPattern&, const SignPattern&) = default;

 private:
  std::vector<int> d_;
};

enum class MultiplierTag { kDiagonal, kVertexConvex, kIncrementalComplete };

std::string_view to_string(MultiplierTag tag);
/// "md", "mc" or "minc".
std::string_view short_name(MultiplierTag tag);

struct MultiplierClass {
  MultiplierClass(MultiplierTag tag, Sector sector, int m);

  MultiplierTag tag;
  Sector sector;
  int m;
};

enum class CopositivityMode { kPsdPlusN, kBruteForce };

/// [-2ab L, (a+b) L; (a+b) L, -2 L] with L = diag(lambda).
SymMatrix md_matrix(const Eigen::VectorXd& lambda, const Sector& sector);

/// The 2^m vertex slopes diag{alpha, beta}^m as diagonals, lexicographic
/// with the first channel most significant and alpha before beta.
std::vector<Eigen::VectorXd> vertex_gammas(const Sector& sector, int m);

/// All 4^m ordered pairs (gbar, ghat); -1 before +1, gbar most significant.
std::vector<std::pair<SignPattern, SignPattern>> sign_pairs(int m);

/// T with [dv; dw] = T [a; b] for vbar = gbar a, vhat = ghat b, a, b >= 0:
///   T = [gbar, -ghat; c gbar + r I, -c ghat - r I].
Eigen::MatrixXd gm_transform(const Sector& sector, const SignPattern& gbar, const SignPattern& ghat);

/// T' M T.
SymMatrix g_m(const SymMatrix& M, const Sector& sector, const SignPattern& gbar, const SignPattern& ghat);

/// [I; X]' M [I; X] with X = diag(x). Throws OutOfSector if some x_i leaves
/// [alpha, beta] by more than 1e-12.
SymMatrix h_m(const SymMatrix& M, const Sector& sector, const Eigen::VectorXd& x);

/// Blocks of M = [Q S; S' R].
struct MultiplierBlocks {
  Eigen::MatrixXd Q, S, R;
};
MultiplierBlocks split_blocks(const SymMatrix& M);

bool membership_md(const SymMatrix& M, const Sector& sector, double tol = 1e-10);
bool membership_mc(const SymMatrix& M, const Sector& sector, double tol = 1e-8);

enum class Verdict { kMember, kNotMember, kIndeterminate };
std::string_view to_string(Verdict v);

struct MincReport {
  Verdict verdict = Verdict::kMember;
  int patterns_checked = 0;
  std::optional<std::pair<SignPattern, SignPattern>> failing;
  /// Nonnegative x with x' g_M x < 0 (brute-force mode only).
  Eigen::VectorXd witness;
  double witness_value = 0.0;
};

MincReport check_minc(const SymMatrix& M, const Sector& sector, CopositivityMode mode, double tol = 1e-8);
bool membership_minc(const SymMatrix& M, const Sector& sector, double tol = 1e-8,
                     CopositivityMode mode = CopositivityMode::kBruteForce);

struct MfbReport {
  bool member = true;
  int points_checked = 0;
  Eigen::VectorXd witness;  // slopes x with h_M(x) not PSD
  double min_eigenvalue = 0.0;
};

/// One-sided test of h_M(x) >= 0 on a grid of grid_density^m points plus
/// `random_points` uniform samples. A false answer is certain.
MfbReport check_mfb_sampled(const SymMatrix& M, const Sector& sector, int grid_density, double tol = 1e-8,
                            int random_points = 1000, std::uint64_t seed = 7);
bool membership_mfb_sampled(const SymMatrix& M, const Sector& sector, int grid_density, double tol = 1e-8);

}  // namespace qcgain
