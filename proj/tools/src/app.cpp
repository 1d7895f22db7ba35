#include "qcgain/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qcgain/cli/io.hpp"
#include "qcgain/cli/sweep.hpp"
#include "qcgain/cli/verify.hpp"
#include "qcgain/errors.hpp"
#include "qcgain/lmi.hpp"

namespace qcgain::cli {

namespace {

nlohmann::json to_json(const Eigen::MatrixXd& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError(path + ": cannot open for writing");
  f << text;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  const StateSpace sys = parse_system_file(cfg.system_path);
  const Sector sector(cfg.alpha, cfg.beta);
  nlohmann::json doc = nlohmann::json::array();
  int code = kExitOk;
  if (sys.well_posedness_warning()) out << "warning: D11 != 0; well-posedness of the loop is assumed\n";
  for (MultiplierTag tag : cfg.classes) {
    const AnalysisProblem problem(sys, MultiplierClass(tag, sector, sys.m()), cfg.eps);
    if (!cfg.dump_prefix.empty()) {
      std::ostringstream triplets;
      build_program(problem).write_triplets(triplets);
      write_output(cfg.dump_prefix + std::string(short_name(tag)) + ".txt", triplets.str(), out);
    }
    const AnalysisResult r = analyze(problem);
    out << short_name(tag) << ": " << to_string(r.status);
    if (r.certified()) out << " gamma=" << format_number(r.gamma);
    out << " iterations=" << r.iterations << " time=" << format_number(r.runtime_seconds) << "s";
    if (!r.message.empty()) out << " (" << r.message << ")";
    out << "\n";
    nlohmann::json entry = {{"class", short_name(tag)},
                            {"alpha", sector.alpha()},
                            {"beta", sector.beta()},
                            {"status", to_string(r.status)},
                            {"solver_status", sdp::to_string(r.solver_status)},
                            {"iterations", r.iterations},
                            {"eps", r.eps}};
    if (r.certified()) {
      entry["gamma"] = r.gamma;
      entry["gamma_sq"] = r.gamma_sq;
      entry["max_eig_L"] = r.max_eig_L;
      entry["P"] = to_json(r.P.dense());
      entry["M"] = to_json(r.M.dense());
    }
    doc.push_back(std::move(entry));
    if (r.status == AnalysisStatus::kVerificationFailed) code = std::max(code, static_cast<int>(kExitVerification));
    if (r.status == AnalysisStatus::kSolverFailure) code = kExitSolver;
  }
  if (!cfg.out_path.empty()) write_output(cfg.out_path, doc.dump(2) + "\n", out);
  return code;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const StateSpace sys = parse_system_file(cfg.system_path);
  const std::vector<SweepRow> rows = run_sweep(sys, cfg);
  std::ostringstream csv;
  write_sweep_csv(csv, rows, cfg.deterministic);
  write_output(cfg.out_path, csv.str(), out);
  return kExitOk;
}

int cmd_margin(const RunConfig& cfg, std::ostream& out) {
  const StateSpace sys = parse_system_file(cfg.system_path);
  std::ostringstream text;
  for (MultiplierTag tag : cfg.classes)
    text << short_name(tag) << " " << format_number(margin_search(sys, tag, cfg.beta_max, cfg.resolution, cfg.eps))
         << "\n";
  write_output(cfg.out_path, text.str(), out);
  return kExitOk;
}

int cmd_norm(const RunConfig& cfg, std::ostream& out) {
  const StateSpace sys = parse_system_file(cfg.system_path);
  write_output(cfg.out_path, format_number(nominal_hinf_norm(sys)) + "\n", out);
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  VerifyOptions opts;
  opts.seed = cfg.seed;
  opts.mode = cfg.mode;
  if (!cfg.mutant_path.empty()) opts.mutant = parse_mutant_file(cfg.mutant_path);
  const VerifyReport report = run_verify(opts);
  write_output(cfg.out_path, report.to_text(), out);
  return report.all_passed() ? kExitOk : kExitVerification;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified l2-gain bounds for discrete-time systems with sector nonlinearities", "qcgain"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string classes = "all", sweep, mode = "brute";

  auto add_system = [&](CLI::App* sub) { sub->add_option("system", cfg.system_path, "System JSON file")->required(); };
  auto add_classes = [&](CLI::App* sub) {
    sub->add_option("--class", classes, "md, mc, minc or all (comma-separated)")->capture_default_str();
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", cfg.out_path, "Output file (default: stdout)"); };
  auto add_eps = [&](CLI::App* sub) { sub->add_option("--eps", cfg.eps, "Strictness margin (0: default)"); };

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Gain bound at one sector");
  add_system(analyze_cmd);
  add_classes(analyze_cmd);
  analyze_cmd->add_option("--alpha", cfg.alpha, "Sector lower slope")->capture_default_str();
  analyze_cmd->add_option("--beta", cfg.beta, "Sector upper slope")->capture_default_str();
  add_eps(analyze_cmd);
  analyze_cmd->add_option("--out", cfg.out_path, "Write certificates as JSON");
  analyze_cmd->add_option("--dump-program", cfg.dump_prefix, "Write each cone program to PREFIX<class>.txt");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Gain bounds over a grid of sectors [alpha, beta]");
  add_system(sweep_cmd);
  add_classes(sweep_cmd);
  sweep_cmd->add_option("--sweep", sweep, "MIN:MAX:COUNT")->required();
  sweep_cmd->add_option("--alpha", cfg.alpha, "Sector lower slope")->capture_default_str();
  sweep_cmd->add_option("--jobs", cfg.jobs, "Worker threads (0: all cores)");
  sweep_cmd->add_flag("--deterministic", cfg.deterministic, "Write zero runtimes");
  add_eps(sweep_cmd);
  add_out(sweep_cmd);

  CLI::App* margin_cmd = app.add_subcommand("margin", "Largest beta in [0, beta] with a certificate");
  add_system(margin_cmd);
  add_classes(margin_cmd);
  margin_cmd->add_option("--resolution", cfg.resolution, "Bisection resolution")->capture_default_str();
  margin_cmd->add_option("--beta-max", cfg.beta_max, "Upper end of the search")->capture_default_str();
  add_eps(margin_cmd);
  add_out(margin_cmd);

  CLI::App* norm_cmd = app.add_subcommand("norm", "H-infinity norm of the nominal channel");
  add_system(norm_cmd);
  add_out(norm_cmd);

  CLI::App* verify_cmd = app.add_subcommand("verify", "Property suites of the multiplier and oracle layers");
  verify_cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  verify_cmd->add_option("--mode", mode, "Minc copositivity check: brute or psdn")
      ->check(CLI::IsMember({"brute", "psdn"}))
      ->capture_default_str();
  verify_cmd->add_option("--mutant", cfg.mutant_path, "JSON multiplier {M, alpha, beta} claimed to be in Minc");
  add_out(verify_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    cfg.classes = parse_classes(classes);
    cfg.mode = mode == "psdn" ? CopositivityMode::kPsdPlusN : CopositivityMode::kBruteForce;
    if (!sweep.empty()) cfg.sweep = parse_sweep_grid(sweep);
    if (analyze_cmd->parsed()) cfg.command = Command::kAnalyze;
    if (sweep_cmd->parsed()) cfg.command = Command::kSweep;
    if (margin_cmd->parsed()) cfg.command = Command::kMargin;
    if (norm_cmd->parsed()) cfg.command = Command::kNorm;
    if (verify_cmd->parsed()) cfg.command = Command::kVerify;
    cfg.validate();
    switch (cfg.command) {
      case Command::kAnalyze: return cmd_analyze(cfg, out);
      case Command::kSweep: return cmd_sweep(cfg, out);
      case Command::kMargin: return cmd_margin(cfg, out);
      case Command::kNorm: return cmd_norm(cfg, out);
      case Command::kVerify: return cmd_verify(cfg, out);
    }
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const FixedPointDivergence& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const Error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace qcgain::cli
