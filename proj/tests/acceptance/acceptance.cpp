// Acceptance checks for the published example and the property suites.
//
//   acceptance [criterion ...]
//
// Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
// Tolerances are fixed here and are not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qcgain/cli/sweep.hpp"
#include "qcgain/cli/verify.hpp"
#include "qcgain/lmi.hpp"
#include "qcgain/system.hpp"
#include "test_support.hpp"

namespace {

using namespace qcgain;

constexpr std::uint64_t kSeed = 1;

// Reference values for the example plant.
constexpr double kRefGammaMd = 11.49;
constexpr double kRefGammaMc = 7.844;
constexpr double kRefGammaMinc = 6.050;
constexpr double kRefNominal = 1.396;
constexpr double kRefMarginMd = 1.17;
constexpr double kRefMarginMc = 1.30;
constexpr double kRefMarginMinc = 1.34;

constexpr double kGainRelTol = 0.02;
constexpr double kGainTimeLimitSeconds = 60.0;
constexpr double kNominalRelTol = 0.01;
constexpr double kMarginResolution = 0.01;
constexpr double kMarginBetaMax = 2.0;
constexpr double kMarginTol = 0.02;
constexpr double kSweepMonotoneTol = 1e-6;
constexpr double kSweepOrderTol = 1e-6;
constexpr double kSweepSmallBeta = 1e-3;
constexpr double kSweepNominalRelTol = 0.02;
constexpr int kDissipationTrials = 100;
constexpr double kDissipationSlack = 1e-3;

struct Outcome {
  bool passed;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool within_rel(double value, double ref, double tol) { return std::abs(value - ref) <= tol * std::abs(ref); }

const MultiplierTag kTags[3] = {MultiplierTag::kDiagonal, MultiplierTag::kVertexConvex,
                                MultiplierTag::kIncrementalComplete};

Outcome gain_reproduction() {
  const StateSpace sys = testing::example_plant();
  const double refs[3] = {kRefGammaMd, kRefGammaMc, kRefGammaMinc};
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream d;
  for (int k = 0; k < 3; ++k) {
    const AnalysisResult r = analyze(AnalysisProblem(sys, MultiplierClass(kTags[k], Sector(0.0, 1.0), 3)));
    const bool hit = r.certified() && within_rel(r.gamma, refs[k], kGainRelTol);
    ok = ok && hit;
    d << short_name(kTags[k]) << " " << (r.certified() ? num(r.gamma) : std::string(to_string(r.status)))
      << " (expected " << num(refs[k]) << " +/- 2%) ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs <= kGainTimeLimitSeconds;
  d << "total " << num(secs) << " s (limit " << num(kGainTimeLimitSeconds) << " s)";
  return {ok, d.str()};
}

Outcome nominal_norm() {
  const double g = nominal_hinf_norm(testing::example_plant());
  return {within_rel(g, kRefNominal, kNominalRelTol),
          "gamma_nom " + num(g) + " (expected " + num(kRefNominal) + " +/- 1%)"};
}

Outcome stability_margins() {
  const StateSpace sys = testing::example_plant();
  const double refs[3] = {kRefMarginMd, kRefMarginMc, kRefMarginMinc};
  bool ok = true;
  std::ostringstream d;
  for (int k = 0; k < 3; ++k) {
    const double beta = margin_search(sys, kTags[k], kMarginBetaMax, kMarginResolution);
    ok = ok && std::abs(beta - refs[k]) <= kMarginTol;
    d << short_name(kTags[k]) << " " << num(beta) << " (expected " << num(refs[k]) << " +/- 0.02)"
      << (k < 2 ? "; " : "");
  }
  return {ok, d.str()};
}

Outcome sweep_shape() {
  const StateSpace sys = testing::example_plant();
  cli::RunConfig cfg;
  cfg.command = cli::Command::kSweep;
  cfg.sweep = cli::SweepGrid{0.0, 1.3, 15};
  const std::vector<cli::SweepRow> rows = cli::run_sweep(sys, cfg);
  const double nominal = nominal_hinf_norm(sys);

  bool ok = rows.size() == 15;
  std::ostringstream d;
  int feasible[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    bool lost = false;
    double prev = 0.0;
    for (const cli::SweepRow& row : rows) {
      const cli::SweepCell& c = row.cells[static_cast<std::size_t>(k)];
      if (!c.has_gamma) {
        lost = true;
        continue;
      }
      ++feasible[k];
      if (lost) {
        ok = false;
        d << short_name(kTags[k]) << " regains feasibility at beta " << num(row.beta) << "; ";
      }
      if (c.gamma < prev - kSweepMonotoneTol) {
        ok = false;
        d << short_name(kTags[k]) << " decreases at beta " << num(row.beta) << "; ";
      }
      prev = c.gamma;
    }
  }
  for (const cli::SweepRow& row : rows) {
    const auto& [md, mc, minc] = row.cells;
    const bool bad = (mc.has_gamma && md.has_gamma && mc.gamma > md.gamma + kSweepOrderTol) ||
                     (minc.has_gamma && mc.has_gamma && minc.gamma > mc.gamma + kSweepOrderTol) ||
                     (mc.has_gamma && !minc.has_gamma) || (md.has_gamma && !mc.has_gamma);
    if (bad) {
      ok = false;
      d << "ordering violated at beta " << num(row.beta) << "; ";
    }
  }
  double worst = 0.0;
  for (MultiplierTag tag : kTags) {
    const cli::SweepCell c = cli::analyze_cell(sys, tag, Sector(0.0, kSweepSmallBeta), 0.0);
    const double rel = c.has_gamma ? std::abs(c.gamma - nominal) / nominal : INFINITY;
    worst = std::max(worst, rel);
  }
  ok = ok && worst <= kSweepNominalRelTol;
  d << "feasible points md/mc/minc " << feasible[0] << "/" << feasible[1] << "/" << feasible[2]
    << "; at beta " << num(kSweepSmallBeta) << " largest deviation from gamma_nom " << num(nominal) << " is "
    << num(100.0 * worst) << "%";
  return {ok, d.str()};
}

Outcome from_property(const cli::PropertyResult& p, bool named = false) {
  std::string d = (named ? p.name + ": " : std::string()) + std::to_string(p.cases) + " cases, " + std::to_string(p.failures) + " failures";
  if (!p.summary.empty()) d += "; " + p.summary;
  for (const std::string& c : p.counterexamples) d += "\n    counterexample: " + c;
  return {p.passed(), d};
}

Outcome increment_roundtrip() { return from_property(cli::increment_suite(kSeed, 1000)); }

Outcome minc_equals_mfb() {
  return from_property(cli::mfb_suite(kSeed, 100, CopositivityMode::kBruteForce));
}

Outcome copositivity_exactness() {
  const Outcome random = from_property(cli::copositivity_suite(kSeed, 500));
  const Outcome horn = from_property(cli::horn_suite(), true);
  return {random.passed && horn.passed, "random " + random.detail + "; " + horn.detail};
}

Outcome concavity_identity() { return from_property(cli::concavity_suite(kSeed, 1000)); }

Outcome dissipation_sanity() {
  const StateSpace sys = testing::example_plant();
  const Sector sector(0.0, 1.0);
  const AnalysisResult r =
      analyze(AnalysisProblem(sys, MultiplierClass(MultiplierTag::kIncrementalComplete, sector, 3)));
  if (!r.certified()) return {false, "no Minc certificate at [0, 1]: " + r.message};
  GainTrialOptions opts;
  opts.trials = kDissipationTrials;
  const double lb = empirical_gain_lb(sys, sector, opts);
  return {lb <= r.gamma + kDissipationSlack,
          "empirical gain " + num(lb) + " over " + std::to_string(kDissipationTrials) + " trials, certified gamma_inc " +
              num(r.gamma)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"gain_reproduction", gain_reproduction},     {"nominal_norm", nominal_norm},
      {"stability_margins", stability_margins},     {"sweep_shape", sweep_shape},
      {"increment_roundtrip", increment_roundtrip},       {"minc_equals_mfb", minc_equals_mfb},
      {"copositivity_exactness", copositivity_exactness}, {"concavity_identity", concavity_identity},
      {"dissipation_sanity", dissipation_sanity},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<const Criterion*> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string want = argv[i];
    const Criterion* found = nullptr;
    for (const Criterion& c : criteria())
      if (want == c.name) found = &c;
    if (!found) {
      std::cerr << "unknown criterion: " << want << "\n";
      return 2;
    }
    selected.push_back(found);
  }
  if (selected.empty())
    for (const Criterion& c : criteria()) selected.push_back(&c);

  int failed = 0;
  for (const Criterion* c : selected) {
    Outcome o{false, {}};
    try {
      o = c->run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::cout << (o.passed ? "PASS " : "FAIL ") << c->name << ": " << o.detail << std::endl;
  }
  std::cout << (selected.size() - failed) << " of " << selected.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
