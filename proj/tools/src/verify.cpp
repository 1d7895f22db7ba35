#include "qcgain/cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "qcgain/errors.hpp"
#include "qcgain/lmi.hpp"
#include "qcgain/oracle.hpp"

namespace qcgain::cli {

namespace {

constexpr std::size_t kMaxDumps = 5;

std::mt19937_64 suite_rng(std::uint64_t seed, std::uint64_t suite) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(suite)};
  return std::mt19937_64(seq);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
  return s + "]";
}

std::string fmt(const SignPattern& p) { return fmt(p.as_vector()); }

std::string fmt(const Sector& s) { return "[" + fmt(s.alpha()) + ", " + fmt(s.beta()) + "]"; }

void record(PropertyResult& r, std::string what) {
  ++r.failures;
  if (r.counterexamples.size() < kMaxDumps) r.counterexamples.push_back(std::move(what));
}

struct Draw {
  std::mt19937_64& rng;
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }
  Eigen::MatrixXd normal_matrix(int r, int c) {
    Eigen::MatrixXd a(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) a(i, j) = normal();
    return a;
  }
  SymMatrix normal_sym(int n) { return SymMatrix::symmetrized(normal_matrix(n, n)); }
  Sector sector(double lo, double hi, double min_width, double max_width) {
    const double a = uniform(lo, hi);
    return Sector(a, a + uniform(min_width, max_width));
  }
};

// blockdiag(I_m, 0_m)
SymMatrix q_shift(int m) {
  SymMatrix s(2 * m);
  for (int i = 0; i < m; ++i) s.set(i, i, 1.0);
  return s;
}

}  // namespace

PropertyResult increment_suite(std::uint64_t seed, int samples) {
  PropertyResult r{"increment_roundtrip", 0, 0, {}, {}};
  auto rng = suite_rng(seed, 1);
  Draw d{rng};
  double worst_forward = 0.0, worst_backward = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int m = d.integer(1, 4);
    const Sector sec = d.chance(0.05) ? [&] { const double a = d.uniform(-2.0, 2.0); return Sector(a, a); }()
                                       : d.sector(-2.0, 2.0, 0.0, 3.0);
    // sector pair -> increment
    Eigen::VectorXd v = d.normal_vector(m), w(m);
    for (int i = 0; i < m; ++i) {
      if (d.chance(0.1)) v(i) = 0.0;
      double g = d.uniform(sec.alpha(), sec.beta());
      if (d.chance(0.1)) g = d.chance(0.5) ? sec.alpha() : sec.beta();
      w(i) = g * v(i);
    }
    ++r.cases;
    try {
      const IncrementalPair p = sector_to_increments(v, w, sec);
      const double scale = 1.0 + v.lpNorm<Eigen::Infinity>() + w.lpNorm<Eigen::Infinity>();
      const double err = std::max((p.dv() - v).lpNorm<Eigen::Infinity>(), (p.dw() - w).lpNorm<Eigen::Infinity>());
      const double graph = std::max((F_ab(sec, p.vbar) - p.wbar).lpNorm<Eigen::Infinity>(),
                                    (F_ab(sec, p.vhat) - p.what).lpNorm<Eigen::Infinity>());
      worst_forward = std::max(worst_forward, err / scale);
      if (err > 1e-9 * scale || graph > 1e-9 * scale) {
        record(r, "sector " + fmt(sec) + " v=" + fmt(v) + " w=" + fmt(w) + ": round-trip error " + fmt(err) +
                      ", graph error " + fmt(graph));
      }
    } catch (const Error& e) {
      record(r, "sector " + fmt(sec) + " v=" + fmt(v) + " w=" + fmt(w) + ": " + e.what());
    }

    // increment -> sector pair
    Eigen::VectorXd vbar = d.normal_vector(m), vhat = d.normal_vector(m);
    for (int i = 0; i < m; ++i) {
      if (d.chance(0.1)) vhat(i) = vbar(i);
      if (d.chance(0.1)) vbar(i) = 0.0;
    }
    ++r.cases;
    const IncrementalPair p = IncrementalPair::from_inputs(sec, vbar, vhat);
    const Eigen::VectorXd g = increments_to_sector(p, sec);
    const Eigen::VectorXd dv = p.dv(), dw = p.dw();
    bool ok = true;
    std::string why;
    for (int i = 0; i < m; ++i) {
      const double consistency = std::abs(dw(i) - g(i) * dv(i));
      const double margin = sec.margin(dv(i), dw(i));
      worst_backward = std::max(worst_backward, std::max(consistency, -margin));
      if (!sec.contains_slope(g(i), 1e-12)) {
        ok = false;
        why = "slope " + fmt(g(i)) + " outside the sector";
      } else if (consistency > 1e-9 * (1.0 + std::abs(dv(i)))) {
        ok = false;
        why = "dw != g dv by " + fmt(consistency);
      } else if (margin < -1e-9) {
        ok = false;
        why = "sector margin " + fmt(margin);
      }
    }
    if (!ok) record(r, "sector " + fmt(sec) + " vbar=" + fmt(vbar) + " vhat=" + fmt(vhat) + ": " + why);
  }
  r.summary = "worst forward error " + fmt(worst_forward) + ", worst backward defect " + fmt(worst_backward);
  return r;
}

PropertyResult mfb_suite(std::uint64_t seed, int count, CopositivityMode mode) {
  PropertyResult r{"minc_equals_mfb", 0, 0, {}, {}};
  auto rng = suite_rng(seed, 2);
  Draw d{rng};
  int members = 0, rejected = 0, increment_witnesses = 0, slope_witnesses = 0;
  for (int k = 0; k < count; ++k) {
    const int m = 1 + k % 2;
    const Sector sec = d.sector(-1.0, 1.0, 0.2, 2.0);
    SymMatrix M;
    switch ((k / 2) % 4) {
      case 0:  // interior of the vertex class
      case 1: {
        M = extremal_multiplier(MultiplierClass(MultiplierTag::kVertexConvex, sec, m), d.normal_sym(2 * m)) +
            0.05 * q_shift(m);
        if ((k / 2) % 4 == 1) {
          // push just outside: every h_M(x) drops by the sampled minimum + 0.05
          const double lo = check_mfb_sampled(M, sec, 21).min_eigenvalue;
          M = M - (lo + 0.05) * q_shift(m);
        }
        break;
      }
      case 2: M = d.normal_sym(2 * m); break;
      default: {
        Eigen::VectorXd lam(m);
        for (int i = 0; i < m; ++i) lam(i) = d.uniform(0.0, 2.0);
        M = md_matrix(lam, sec) + 0.3 * d.normal_sym(2 * m);
        break;
      }
    }
    ++r.cases;
    const MincReport minc = check_minc(M, sec, mode);
    const MfbReport mfb = check_mfb_sampled(M, sec, 21);
    const std::string tag = "case " + std::to_string(k) + " (m=" + std::to_string(m) + ", sector " + fmt(sec) + ")";
    if (minc.verdict == Verdict::kIndeterminate) {
      record(r, tag + ": Minc check indeterminate");
      continue;
    }
    const bool in_minc = minc.verdict == Verdict::kMember;
    if (in_minc != mfb.member) {
      record(r, tag + ": Minc says " + std::string(to_string(minc.verdict)) + ", sampled full-block says " +
                    (mfb.member ? "member" : "not a member") + " (min eigenvalue " + fmt(mfb.min_eigenvalue) + ")");
      continue;
    }
    if (in_minc) {
      ++members;
      continue;
    }
    ++rejected;
    if (minc.witness.size() > 0 && minc.failing) {
      const IncrementalPair p = witness_to_increment(sec, minc.failing->first, minc.failing->second, minc.witness);
      const double q = qc_value(M, p.dv(), p.dw());
      if (!(q < 0.0)) {
        record(r, tag + ": copositivity witness " + fmt(minc.witness) + " gives QC value " + fmt(q));
        continue;
      }
      ++increment_witnesses;
    }
    const SymMatrix h = h_m(M, sec, mfb.witness);
    const double e = h.min_eigenvalue();
    if (!(e < 0.0)) {
      record(r, tag + ": slope witness " + fmt(mfb.witness) + " has min eigenvalue " + fmt(e));
      continue;
    }
    ++slope_witnesses;
  }
  r.summary = std::to_string(members) + " members, " + std::to_string(rejected) + " non-members (" +
              std::to_string(increment_witnesses) + " increment witnesses, " + std::to_string(slope_witnesses) +
              " slope witnesses), agreement " + std::to_string(r.cases - r.failures) + "/" + std::to_string(r.cases);
  return r;
}

PropertyResult soundness_suite(std::uint64_t seed, int multipliers, int increments) {
  PropertyResult r{"minc_soundness", 0, 0, {}, {}};
  auto rng = suite_rng(seed, 3);
  Draw d{rng};
  double worst = 0.0;
  for (int k = 0; k < multipliers; ++k) {
    const int m = 1 + k % 3;
    const Sector sec = d.sector(-1.0, 1.0, 0.2, 2.0);
    const SymMatrix M = extremal_multiplier(MultiplierClass(MultiplierTag::kVertexConvex, sec, m), d.normal_sym(2 * m));
    const double scale = 1.0 + M.frobenius_norm();
    for (int t = 0; t < increments; ++t) {
      const IncrementalPair p = IncrementalPair::from_inputs(sec, d.normal_vector(m), d.normal_vector(m));
      const double mag = 1.0 + p.dv().squaredNorm() + p.dw().squaredNorm();
      const double q = qc_value(M, p.dv(), p.dw()) / mag;
      worst = std::min(worst, q / scale);
      ++r.cases;
      if (q < -1e-8 * scale) {
        record(r, "sector " + fmt(sec) + " dv=" + fmt(p.dv()) + " dw=" + fmt(p.dw()) + ": QC value " + fmt(q * mag));
      }
    }
  }
  r.summary = "most negative scaled QC value " + fmt(worst);
  return r;
}

PropertyResult copositivity_suite(std::uint64_t seed, int count) {
  PropertyResult r{"copositivity_exactness", 0, 0, {}, {}};
  auto rng = suite_rng(seed, 4);
  Draw d{rng};
  int copositive = 0;
  for (int k = 0; k < count; ++k) {
    const int n = 1 + k % 4;
    Eigen::MatrixXd a;
    switch ((k / 4) % 5) {
      case 0: a = d.normal_sym(n).dense(); break;
      case 1: {  // strictly inside PSD + N
        const Eigen::MatrixXd b = d.normal_matrix(n, n);
        a = b * b.transpose() + d.normal_matrix(n, n).cwiseAbs() + 0.05 * Eigen::MatrixXd::Identity(n, n);
        break;
      }
      case 2: {
        const Eigen::MatrixXd b = d.normal_matrix(n, 1);
        a = b * b.transpose() + d.normal_matrix(n, n).cwiseAbs() + 0.3 * d.normal_sym(n).dense();
        break;
      }
      case 3: {
        a = d.normal_sym(n).dense();
        a.diagonal() = a.diagonal().cwiseAbs();
        break;
      }
      default: a = d.normal_matrix(n, n).cwiseAbs() - 0.2 * Eigen::MatrixXd::Ones(n, n); break;
    }
    const SymMatrix A = SymMatrix::symmetrized(a);
    ++r.cases;
    const CopositivityResult brute = copositive_bruteforce(A);
    const PsdPlusNResult psdn = copositive_psd_plus_n(A);
    if (brute.verdict == CopositivityVerdict::kIndeterminate) {
      record(r, "case " + std::to_string(k) + ": brute force indeterminate after " +
                    std::to_string(brute.subsimplices) + " subsimplices");
      continue;
    }
    const bool cop = brute.verdict == CopositivityVerdict::kCopositive;
    copositive += cop ? 1 : 0;
    if (cop != psdn.decomposable) {
      std::ostringstream dump;
      dump << "case " << k << " (n=" << n << "): brute force " << (cop ? "copositive" : "not copositive")
           << ", PSD+N t* = " << fmt(psdn.t_star);
      if (!cop) dump << ", witness " << fmt(brute.witness) << " value " << fmt(brute.witness_value);
      record(r, dump.str());
    }
  }
  r.summary = std::to_string(copositive) + " copositive, " + std::to_string(r.cases - copositive) + " not";
  return r;
}

PropertyResult horn_suite() {
  PropertyResult r{"horn_matrix", 2, 0, {}, {}};
  Eigen::MatrixXd h(5, 5);
  h << 1, -1, 1, 1, -1,  //
      -1, 1, -1, 1, 1,   //
      1, -1, 1, -1, 1,   //
      1, 1, -1, 1, -1,   //
      -1, 1, 1, -1, 1;
  const SymMatrix H = SymMatrix::from_dense(h);
  const CopositivityResult brute = copositive_bruteforce(H);
  const PsdPlusNResult psdn = copositive_psd_plus_n(H);
  if (brute.verdict != CopositivityVerdict::kCopositive)
    record(r, "brute force did not classify the Horn matrix as copositive");
  if (psdn.decomposable) record(r, "PSD+N decomposed the Horn matrix (t* = " + fmt(psdn.t_star) + ")");
  r.summary = "brute force " + std::to_string(brute.subsimplices) + " subsimplices, PSD+N t* = " + fmt(psdn.t_star);
  return r;
}

PropertyResult concavity_suite(std::uint64_t seed, int count) {
  PropertyResult r{"concavity_identity", 0, 0, {}, {}};
  auto rng = suite_rng(seed, 5);
  Draw d{rng};
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const int m = d.integer(1, 4);
    const Sector sec = d.sector(-2.0, 2.0, 0.0, 3.0);
    const SymMatrix M = d.normal_sym(2 * m);
    Eigen::VectorXd x(m), y(m);
    for (int i = 0; i < m; ++i) {
      x(i) = d.uniform(sec.alpha(), sec.beta());
      y(i) = d.uniform(sec.alpha(), sec.beta());
    }
    const double t = d.uniform(0.0, 1.0);
    const Eigen::VectorXd z = (t * x + (1.0 - t) * y).cwiseMax(sec.alpha()).cwiseMin(sec.beta());
    const Eigen::MatrixXd lhs = h_m(M, sec, z).dense() - t * h_m(M, sec, x).dense() - (1.0 - t) * h_m(M, sec, y).dense();
    const Eigen::MatrixXd diff = (x - y).asDiagonal();
    const Eigen::MatrixXd rhs = -t * (1.0 - t) * diff * split_blocks(M).R * diff;
    const double err = (lhs - rhs).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    ++r.cases;
    if (err > 1e-10) record(r, "case " + std::to_string(k) + ": entrywise error " + fmt(err));
  }
  r.summary = "largest entrywise error " + fmt(worst);
  return r;
}

PropertyResult mutant_suite(const Mutant& mutant, CopositivityMode mode) {
  PropertyResult r{"mutant_in_minc", 1, 0, {}, {}};
  const SymMatrix& M = mutant.M;
  const Sector& sec = mutant.sector;
  const MincReport rep = check_minc(M, sec, mode);
  if (rep.verdict == Verdict::kMember) {
    r.summary = "multiplier is in Minc for sector " + fmt(sec);
    return r;
  }
  // The brute-force check carries the witness, whatever mode rejected it.
  const MincReport brute = mode == CopositivityMode::kBruteForce ? rep : check_minc(M, sec, CopositivityMode::kBruteForce);
  std::ostringstream dump;
  dump << "multiplier rejected (" << to_string(rep.verdict) << ") for sector " << fmt(sec);
  if (brute.failing && brute.witness.size() > 0) {
    const IncrementalPair p = witness_to_increment(sec, brute.failing->first, brute.failing->second, brute.witness);
    dump << "; sign pair gbar=" << fmt(brute.failing->first) << " ghat=" << fmt(brute.failing->second)
         << "; witness increment vbar=" << fmt(p.vbar) << " vhat=" << fmt(p.vhat) << " dv=" << fmt(p.dv())
         << " dw=" << fmt(p.dw()) << " QC value " << fmt(qc_value(M, p.dv(), p.dw()));
  }
  const MfbReport mfb = check_mfb_sampled(M, sec, 21);
  if (!mfb.member) {
    const SymMatrix h = h_m(M, sec, mfb.witness);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
    const Eigen::VectorXd vbar = es.eigenvectors().col(0);
    try {
      const RepeatedCounterexample ce = repeated_counterexample(M, sec, mfb.witness, vbar);
      dump << "; repeated nonlinearity through " << ce.phi.points.size() << " breakpoints violates the QC at vbar="
           << fmt(ce.vbar) << " with value " << fmt(ce.qc);
    } catch (const Error& e) {
      dump << "; no repeated counterexample (" << e.what() << ")";
    }
  }
  record(r, dump.str());
  r.summary = "multiplier is not in Minc";
  return r;
}

bool VerifyReport::all_passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  out << "qcgain verify\n";
  out << "seed: " << seed << "\n";
  out << "copositivity mode: " << (mode == CopositivityMode::kBruteForce ? "brute" : "psdn") << "\n";
  int passed = 0;
  for (const PropertyResult& p : properties) {
    passed += p.passed() ? 1 : 0;
    out << (p.passed() ? "PASS " : "FAIL ") << p.name << ": " << p.cases << " cases, " << p.failures << " failures";
    if (!p.summary.empty()) out << "; " << p.summary;
    out << "\n";
    for (const std::string& c : p.counterexamples) out << "  counterexample: " << c << "\n";
  }
  out << "result: " << passed << " of " << properties.size() << " properties passed\n";
  return out.str();
}

VerifyReport run_verify(const VerifyOptions& options) {
  VerifyReport report;
  report.seed = options.seed;
  report.mode = options.mode;
  report.properties.push_back(increment_suite(options.seed));
  report.properties.push_back(mfb_suite(options.seed, 100, options.mode));
  report.properties.push_back(soundness_suite(options.seed));
  report.properties.push_back(copositivity_suite(options.seed));
  report.properties.push_back(horn_suite());
  report.properties.push_back(concavity_suite(options.seed));
  if (options.mutant) report.properties.push_back(mutant_suite(*options.mutant, options.mode));
  return report;
}

}  // namespace qcgain::cli
