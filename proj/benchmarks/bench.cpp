#include <random>

#include <benchmark/benchmark.h>

#include "qcgain/cli/io.hpp"
#include "qcgain/lmi.hpp"
#include "qcgain/oracle.hpp"
#include "qcgain/sdp.hpp"

namespace {

using namespace qcgain;

const StateSpace& plant() {
  static const StateSpace sys = cli::parse_system_file(std::string(QCGAIN_BENCH_DATA_DIR) + "/example_plant.json");
  return sys;
}

SymMatrix random_sym(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  SymMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a.set(i, j, g(rng));
  return a;
}

void BM_Analyze(benchmark::State& state) {
  const auto tag = static_cast<MultiplierTag>(state.range(0));
  const AnalysisProblem prob(plant(), MultiplierClass(tag, Sector(0.0, 1.0), 3));
  int iterations = 0;
  for (auto _ : state) {
    const AnalysisResult r = analyze(prob);
    iterations = r.iterations;
    benchmark::DoNotOptimize(r.gamma);
  }
  state.SetLabel(std::string(short_name(tag)));
  state.counters["ipm_iters"] = iterations;
}
BENCHMARK(BM_Analyze)
    ->Arg(static_cast<int>(MultiplierTag::kDiagonal))
    ->Arg(static_cast<int>(MultiplierTag::kVertexConvex))
    ->Arg(static_cast<int>(MultiplierTag::kIncrementalComplete))
    ->Unit(benchmark::kMillisecond);

void BM_BuildProgramMinc(benchmark::State& state) {
  const AnalysisProblem prob(plant(), MultiplierClass(MultiplierTag::kIncrementalComplete, Sector(0.0, 1.0), 3));
  for (auto _ : state) benchmark::DoNotOptimize(build_program(prob).num_rows());
}
BENCHMARK(BM_BuildProgramMinc)->Unit(benchmark::kMillisecond);

// g_M matrices of a vertex-class multiplier are copositive, so the search
// has to exhaust the simplex.
void BM_CopositiveBruteForce(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const Sector sector(0.0, 1.0);
  const SymMatrix M =
      extremal_multiplier(MultiplierClass(MultiplierTag::kVertexConvex, sector, m), random_sym(2 * m, 3));
  const auto pairs = sign_pairs(m);
  const SymMatrix g = g_m(M, sector, pairs[1].first, pairs[1].second);
  std::size_t nodes = 0;
  for (auto _ : state) {
    const CopositivityResult r = copositive_bruteforce(g);
    nodes = r.subsimplices;
    benchmark::DoNotOptimize(r.verdict);
  }
  state.counters["subsimplices"] = static_cast<double>(nodes);
}
BENCHMARK(BM_CopositiveBruteForce)->DenseRange(1, 3)->Unit(benchmark::kMicrosecond);

void BM_MincMembership(benchmark::State& state) {
  const Sector sector(0.0, 1.0);
  const auto mode = state.range(0) == 0 ? CopositivityMode::kBruteForce : CopositivityMode::kPsdPlusN;
  const SymMatrix M =
      extremal_multiplier(MultiplierClass(MultiplierTag::kVertexConvex, sector, 2), random_sym(4, 5));
  for (auto _ : state) benchmark::DoNotOptimize(membership_minc(M, sector, 1e-8, mode));
  state.SetLabel(mode == CopositivityMode::kBruteForce ? "brute" : "psdn");
}
BENCHMARK(BM_MincMembership)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SymEig(benchmark::State& state) {
  const SymMatrix a = random_sym(static_cast<int>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(sdp::sym_eig(a).values(0));
}
BENCHMARK(BM_SymEig)->RangeMultiplier(2)->Range(2, 16);

void BM_NominalNorm(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(nominal_hinf_norm(plant()));
}
BENCHMARK(BM_NominalNorm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
