#include "qcgain/cli/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <ostream>
#include <thread>

#include "qcgain/errors.hpp"

namespace qcgain::cli {

namespace {

std::size_t class_slot(MultiplierTag tag) {
  switch (tag) {
    case MultiplierTag::kDiagonal: return 0;
    case MultiplierTag::kVertexConvex: return 1;
    case MultiplierTag::kIncrementalComplete: return 2;
  }
  return 0;
}

SweepRow compute_row(const StateSpace& sys, const RunConfig& config, double beta) {
  SweepRow row;
  row.beta = beta;
  for (auto& c : row.cells) c.status = "SKIPPED";
  if (config.alpha == 0.0 && beta == 0.0) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepCell nominal;
    try {
      nominal.gamma = nominal_hinf_norm(sys);
      nominal.has_gamma = true;
      nominal.status = "NOMINAL";
    } catch (const UnstableNominal&) {
      nominal.status = "UNSTABLE";
    } catch (const Error&) {
      nominal.status = "SOLVER_FAILURE";
    }
    nominal.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto& c : row.cells) c = nominal;
    return row;
  }
  for (MultiplierTag tag : config.classes)
    row.cells[class_slot(tag)] = analyze_cell(sys, tag, Sector(config.alpha, beta), config.eps);
  return row;
}

}  // namespace

SweepCell analyze_cell(const StateSpace& sys, MultiplierTag tag, const Sector& sector, double eps) {
  SweepCell cell;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const AnalysisResult r = analyze(AnalysisProblem(sys, MultiplierClass(tag, sector, sys.m()), eps));
    cell.status = std::string(to_string(r.status));
    if (r.certified()) {
      cell.has_gamma = true;
      cell.gamma = r.gamma;
    }
  } catch (const Error&) {
    cell.status = "SOLVER_FAILURE";
  }
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}

std::vector<SweepRow> run_sweep(const StateSpace& sys, const RunConfig& config) {
  if (!config.sweep) throw ParseError("run_sweep: no sweep grid configured");
  const std::vector<double> betas = config.sweep->points();
  std::vector<SweepRow> rows(betas.size());
  unsigned workers = config.jobs > 0 ? static_cast<unsigned>(config.jobs) : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1U, static_cast<unsigned>(betas.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t k = next++; k < betas.size(); k = next++) {
      try {
        rows[k] = compute_row(sys, config, betas[k]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool deterministic) {
  out << kSweepHeader << '\n';
  for (const SweepRow& row : rows) {
    out << format_number(row.beta);
    for (const SweepCell& c : row.cells) out << ',' << (c.has_gamma ? format_number(c.gamma) : "");
    for (const SweepCell& c : row.cells) out << ',' << c.status;
    for (const SweepCell& c : row.cells) out << ',' << format_number(deterministic ? 0.0 : c.seconds);
    out << '\n';
  }
}

}  // namespace qcgain::cli
