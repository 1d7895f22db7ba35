#include "qcgain/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "qcgain/errors.hpp"
#include "qcgain/oracle.hpp"

namespace qcgain {

SignPattern::SignPattern(std::vector<int> d) : d_(std::move(d)) {
  for (int s : d_)
    if (s != -1 && s != 1) throw Error("SignPattern: entries must be -1 or +1");
}

SignPattern SignPattern::from_bits(int m, std::uint64_t bits) {
  std::vector<int> d(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) d[static_cast<std::size_t>(i)] = (bits >> (m - 1 - i)) & 1U ? 1 : -1;
  return SignPattern(std::move(d));
}

Eigen::VectorXd SignPattern::as_vector() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v(i) = d_[static_cast<std::size_t>(i)];
  return v;
}

std::string_view to_string(MultiplierTag tag) {
  switch (tag) {
    case MultiplierTag::kDiagonal: return "Diagonal";
    case MultiplierTag::kVertexConvex: return "VertexConvex";
    case MultiplierTag::kIncrementalComplete: return "IncrementalComplete";
  }
  return "Unknown";
}

std::string_view short_name(MultiplierTag tag) {
  switch (tag) {
    case MultiplierTag::kDiagonal: return "md";
    case MultiplierTag::kVertexConvex: return "mc";
    case MultiplierTag::kIncrementalComplete: return "minc";
  }
  return "?";
}

MultiplierClass::MultiplierClass(MultiplierTag t, Sector s, int channels) : tag(t), sector(s), m(channels) {
  if (m < 1) throw DimensionMismatch("MultiplierClass: m must be >= 1");
}

SymMatrix md_matrix(const Eigen::VectorXd& lambda, const Sector& sector) {
  const int m = static_cast<int>(lambda.size());
  const double a = sector.alpha(), b = sector.beta();
  SymMatrix M(2 * m);
  for (int i = 0; i < m; ++i) {
    const double l = lambda(i);
    if (!std::isfinite(l)) throw NonFiniteEntry("md_matrix: non-finite lambda");
    if (l < 0.0) throw NegativeLambda("md_matrix: lambda[" + std::to_string(i) + "] is negative");
    M.set(i, i, -2.0 * a * b * l);
    M.set(i, m + i, (a + b) * l);
    M.set(m + i, m + i, -2.0 * l);
  }
  return M;
}

std::vector<Eigen::VectorXd> vertex_gammas(const Sector& sector, int m) {
  if (m < 1) throw DimensionMismatch("vertex_gammas: m must be >= 1");
  std::vector<Eigen::VectorXd> out;
  const std::uint64_t count = std::uint64_t{1} << m;
  out.reserve(count);
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    Eigen::VectorXd g(m);
    for (int i = 0; i < m; ++i) g(i) = (bits >> (m - 1 - i)) & 1U ? sector.beta() : sector.alpha();
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::pair<SignPattern, SignPattern>> sign_pairs(int m) {
  if (m < 1) throw DimensionMismatch("sign_pairs: m must be >= 1");
  std::vector<std::pair<SignPattern, SignPattern>> out;
  const std::uint64_t count = std::uint64_t{1} << m;
  out.reserve(count * count);
  for (std::uint64_t hi = 0; hi < count; ++hi)
    for (std::uint64_t lo = 0; lo < count; ++lo) out.emplace_back(SignPattern::from_bits(m, hi), SignPattern::from_bits(m, lo));
  return out;
}

Eigen::MatrixXd gm_transform(const Sector& sector, const SignPattern& gbar, const SignPattern& ghat) {
  const int m = gbar.size();
  if (ghat.size() != m) throw DimensionMismatch("gm_transform: sign patterns differ in length");
  const double c = sector.center(), r = sector.radius();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = gbar[i];
    t(i, m + i) = -ghat[i];
    t(m + i, i) = c * gbar[i] + r;
    t(m + i, m + i) = -c * ghat[i] - r;
  }
  return t;
}

SymMatrix g_m(const SymMatrix& M, const Sector& sector, const SignPattern& gbar, const SignPattern& ghat) {
  if (M.size() != 2 * gbar.size()) throw DimensionMismatch("g_m: M must be 2m x 2m");
  const Eigen::MatrixXd t = gm_transform(sector, gbar, ghat);
  return SymMatrix::symmetrized(t.transpose() * M.dense() * t);
}

SymMatrix h_m(const SymMatrix& M, const Sector& sector, const Eigen::VectorXd& x) {
  const int m = static_cast<int>(x.size());
  if (M.size() != 2 * m) throw DimensionMismatch("h_m: M must be 2m x 2m");
  for (int i = 0; i < m; ++i) {
    if (x(i) < sector.alpha() - 1e-12 || x(i) > sector.beta() + 1e-12)
      throw OutOfSector("h_m: x[" + std::to_string(i) + "] is outside the sector");
  }
  Eigen::MatrixXd t(2 * m, m);
  t << Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd(x.asDiagonal());
  return SymMatrix::symmetrized(t.transpose() * M.dense() * t);
}

MultiplierBlocks split_blocks(const SymMatrix& M) {
  if (M.size() % 2 != 0) throw DimensionMismatch("split_blocks: M must have even order");
  const int m = M.size() / 2;
  const Eigen::MatrixXd d = M.dense();
  return {d.topLeftCorner(m, m), d.topRightCorner(m, m), d.bottomRightCorner(m, m)};
}

bool membership_md(const SymMatrix& M, const Sector& sector, double tol) {
  const auto [q, s, r] = split_blocks(M);
  const int m = static_cast<int>(r.rows());
  const Eigen::VectorXd lambda = -0.5 * r.diagonal();
  if (lambda.size() > 0 && lambda.minCoeff() < -tol) return false;
  const Eigen::MatrixXd lam = lambda.asDiagonal();
  const double a = sector.alpha(), b = sector.beta();
  Eigen::MatrixXd expect(2 * m, 2 * m);
  expect << -2.0 * a * b * lam, (a + b) * lam, (a + b) * lam, -2.0 * lam;
  return (M.dense() - expect).cwiseAbs().maxCoeff() <= tol * (1.0 + M.frobenius_norm());
}

bool membership_mc(const SymMatrix& M, const Sector& sector, double tol) {
  const int m = M.size() / 2;
  const auto blocks = split_blocks(M);
  if (!SymMatrix::symmetrized(blocks.R).is_negative_definite(tol)) return false;
  for (const auto& g : vertex_gammas(sector, m))
    if (!h_m(M, sector, g).is_psd(tol)) return false;
  return true;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kMember: return "member";
    case Verdict::kNotMember: return "not a member";
    case Verdict::kIndeterminate: return "indeterminate";
  }
  return "?";
}

MincReport check_minc(const SymMatrix& M, const Sector& sector, CopositivityMode mode, double tol) {
  if (M.size() % 2 != 0 || M.size() == 0) throw DimensionMismatch("membership_minc: M must be 2m x 2m");
  const int m = M.size() / 2;
  MincReport report;
  for (const auto& [gbar, ghat] : sign_pairs(m)) {
    const SymMatrix g = g_m(M, sector, gbar, ghat);
    ++report.patterns_checked;
    if (mode == CopositivityMode::kPsdPlusN) {
      if (!copositive_psd_plus_n(g, tol).decomposable) {
        report.verdict = Verdict::kNotMember;
        report.failing.emplace(gbar, ghat);
        return report;
      }
      continue;
    }
    BruteForceOptions opts;
    opts.rel_tol = tol;
    const CopositivityResult res = copositive_bruteforce(g, opts);
    if (res.verdict == CopositivityVerdict::kNotCopositive) {
      report.verdict = Verdict::kNotMember;
      report.failing.emplace(gbar, ghat);
      report.witness = res.witness;
      report.witness_value = res.witness_value;
      return report;
    }
    if (res.verdict == CopositivityVerdict::kIndeterminate && report.verdict == Verdict::kMember) {
      report.verdict = Verdict::kIndeterminate;
      report.failing.emplace(gbar, ghat);
    }
  }
  return report;
}

bool membership_minc(const SymMatrix& M, const Sector& sector, double tol, CopositivityMode mode) {
  return check_minc(M, sector, mode, tol).verdict == Verdict::kMember;
}

MfbReport check_mfb_sampled(const SymMatrix& M, const Sector& sector, int grid_density, double tol, int random_points,
                            std::uint64_t seed) {
  if (grid_density < 2) throw Error("membership_mfb_sampled: grid_density must be >= 2");
  if (M.size() % 2 != 0 || M.size() == 0) throw DimensionMismatch("membership_mfb_sampled: M must be 2m x 2m");
  const int m = M.size() / 2;
  MfbReport report;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  auto probe = [&](const Eigen::VectorXd& x) {
    const SymMatrix h = h_m(M, sector, x);
    const double e = h.min_eigenvalue();
    ++report.points_checked;
    if (e < report.min_eigenvalue) {
      report.min_eigenvalue = e;
      if (!h.is_psd(tol)) {
        report.member = false;
        report.witness = x;
      }
    }
  };
  const double a = sector.alpha(), b = sector.beta();
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd x(m);
  while (true) {
    for (int i = 0; i < m; ++i) x(i) = a + (b - a) * idx[static_cast<std::size_t>(i)] / (grid_density - 1);
    probe(x);
    int k = m - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == grid_density) idx[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(a, b);
  for (int p = 0; p < random_points; ++p) {
    for (int i = 0; i < m; ++i) x(i) = unit(rng);
    probe(x);
  }
  return report;
}

bool membership_mfb_sampled(const SymMatrix& M, const Sector& sector, int grid_density, double tol) {
  return check_mfb_sampled(M, sector, grid_density, tol).member;
}

}  // namespace qcgain
