#include "qcgain/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "qcgain/errors.hpp"
#include "qcgain/sdp.hpp"

namespace qcgain {

Sector::Sector(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw NonFiniteEntry("Sector: non-finite bound");
  if (alpha > beta) throw Error("Sector: alpha must not exceed beta");
}

namespace {

void check_block(const Eigen::MatrixXd& mtx, const char* name, int rows, int cols) {
  if (mtx.rows() != rows || mtx.cols() != cols) {
    throw DimensionMismatch(std::string("StateSpace: ") + name + " is " + std::to_string(mtx.rows()) + "x" +
                            std::to_string(mtx.cols()) + ", expected " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
  if (!mtx.allFinite()) throw NonFiniteEntry(std::string("StateSpace: non-finite entry in ") + name);
}

}  // namespace

StateSpace::StateSpace(StateSpaceData data, Dims dims) : d_(std::move(data)), dims_(dims) { validate(); }

StateSpace::StateSpace(StateSpaceData data) : d_(std::move(data)) {
  dims_.nx = static_cast<int>(d_.A.rows());
  dims_.m = static_cast<int>(d_.B1.cols());
  dims_.nu = static_cast<int>(d_.B2.cols());
  dims_.ny = static_cast<int>(d_.C2.rows());
  validate();
}

void StateSpace::validate() {
  const auto [nx, m, nu, ny] = dims_;
  if (nx < 0 || m < 0 || nu < 0 || ny < 0) throw DimensionMismatch("StateSpace: negative dimension");
  check_block(d_.A, "A", nx, nx);
  check_block(d_.B1, "B1", nx, m);
  check_block(d_.B2, "B2", nx, nu);
  check_block(d_.C1, "C1", m, nx);
  check_block(d_.C2, "C2", ny, nx);
  check_block(d_.D11, "D11", m, m);
  check_block(d_.D12, "D12", m, nu);
  check_block(d_.D21, "D21", ny, m);
  check_block(d_.D22, "D22", ny, nu);
  d11_warning_ = d_.D11.size() > 0 && d_.D11.cwiseAbs().maxCoeff() > 0.0;
}

double StateSpace::data_norm() const {
  double s = 0.0;
  for (const Eigen::MatrixXd* b : {&d_.A, &d_.B1, &d_.B2, &d_.C1, &d_.C2, &d_.D11, &d_.D12, &d_.D21, &d_.D22})
    s += b->squaredNorm();
  return std::sqrt(s);
}

Trajectory simulate(const StateSpace& sys, const ChannelMap& phi, const std::vector<Eigen::VectorXd>& u,
                    const Eigen::VectorXd& x0, const FixedPointOptions& fp) {
  if (x0.size() != sys.nx()) throw DimensionMismatch("simulate: x0 has wrong length");
  const int m = sys.m();
  auto apply_phi = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd w(m);
    for (int i = 0; i < m; ++i) w(i) = phi(i, v(i));
    return w;
  };

  Trajectory tr;
  tr.u = u;
  tr.x.reserve(u.size() + 1);
  tr.x.push_back(x0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k].size() != sys.nu()) throw DimensionMismatch("simulate: input has wrong length");
    const Eigen::VectorXd& x = tr.x.back();
    const Eigen::VectorXd base = sys.C1() * x + sys.D12() * u[k];
    Eigen::VectorXd v = base;
    Eigen::VectorXd w = apply_phi(v);
    if (sys.well_posedness_warning()) {
      bool converged = false;
      for (int it = 0; it < fp.max_iterations; ++it) {
        const Eigen::VectorXd target = base + sys.D11() * w;
        const double res = (target - v).lpNorm<Eigen::Infinity>();
        if (res <= fp.tolerance * std::max(1.0, v.lpNorm<Eigen::Infinity>())) {
          converged = true;
          break;
        }
        v = (1.0 - fp.damping) * v + fp.damping * target;
        w = apply_phi(v);
      }
      if (!converged) {
        throw FixedPointDivergence("simulate: loop equation did not converge at step " + std::to_string(k));
      }
    }
    tr.v.push_back(v);
    tr.w.push_back(w);
    tr.y.push_back(sys.C2() * x + sys.D21() * w + sys.D22() * u[k]);
    tr.x.push_back(sys.A() * x + sys.B1() * w + sys.B2() * u[k]);
  }
  return tr;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// min t s.t. BRL(P, gamma) <= t I, P >= 0. gamma is achievable iff t* < 0.
double brl_margin(const StateSpace& sys, double gamma) {
  const int nx = sys.nx(), nu = sys.nu(), n = nx + nu;
  const Eigen::MatrixXd& a = sys.A();
  const Eigen::MatrixXd& b = sys.B2();
  Eigen::MatrixXd cd(sys.ny(), n);
  cd << sys.C2(), sys.D22();
  Eigen::MatrixXd constant = cd.transpose() * cd;
  constant.bottomRightCorner(nu, nu).diagonal().array() -= gamma * gamma;
  Eigen::MatrixXd ab(nx, n);
  ab << a, b;

  sdp::ConeProgram prog;
  const int p = prog.add_psd(nx, "P");
  const int t = prog.add_free(1, "t");
  const int s = prog.add_psd(n, "slack");
  prog.set_cost(t, 0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      // slack_ij + BRL_ij(P) - t delta_ij = -constant_ij
      const int row = prog.add_row(-constant(i, j));
      prog.add_psd_term(row, s, i, j, 1.0);
      if (i == j) prog.add_term(row, t, 0, -1.0);
      for (int k = 0; k < nx; ++k) {
        for (int l = k; l < nx; ++l) {
          // coefficient of P_kl in [A B]' P [A B] - diag(P, 0)
          double coef = ab(k, i) * ab(l, j);
          if (k != l) coef += ab(l, i) * ab(k, j);
          if (i == k && j == l && i < nx) coef -= 1.0;
          if (coef != 0.0) prog.add_psd_term(row, p, k, l, coef);
        }
      }
    }
  }
  const sdp::Solution sol = sdp::solve(prog);
  if (sol.status != sdp::SolveStatus::kOptimal) {
    throw SolverFailure("nominal_hinf_norm: bounded-real program ended with status " +
                        std::string(sdp::to_string(sol.status)));
  }
  return sol.primal_objective;
}

}  // namespace

double nominal_hinf_norm(const StateSpace& sys, double rel_tol) {
  const double rho = spectral_radius(sys.A());
  if (rho >= 1.0 - 1e-9) {
    throw UnstableNominal("nominal_hinf_norm: spectral radius " + std::to_string(rho) + " >= 1");
  }
  double lo = 0.0;
  if (sys.D22().size() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.D22());
    lo = svd.singularValues()(0);
  }
  const bool dynamic = sys.nx() > 0 && sys.B2().size() > 0 && sys.C2().size() > 0 &&
                       sys.B2().cwiseAbs().maxCoeff() > 0.0 && sys.C2().cwiseAbs().maxCoeff() > 0.0;
  if (!dynamic || sys.nu() == 0 || sys.ny() == 0) return lo;

  double hi = std::max(2.0 * lo, 1.0);
  while (brl_margin(sys, hi) >= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw SolverFailure("nominal_hinf_norm: no finite bound found");
  }
  while (hi - lo > rel_tol * hi + 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (brl_margin(sys, mid) < 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

namespace {

double signal_energy(const std::vector<Eigen::VectorXd>& s) {
  double e = 0.0;
  for (const auto& v : s) e += v.squaredNorm();
  return e;
}

std::vector<TwoSlopeChannel> random_channels(const Sector& sector, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> slope(sector.alpha(), sector.beta());
  std::vector<TwoSlopeChannel> out;
  for (int i = 0; i < m; ++i) {
    const double a = sector.alpha() == sector.beta() ? sector.alpha() : slope(rng);
    const double b = sector.alpha() == sector.beta() ? sector.alpha() : slope(rng);
    out.push_back({a, b});
  }
  return out;
}

double trial_gain(const StateSpace& sys, const std::vector<TwoSlopeChannel>& ch,
                  const std::vector<Eigen::VectorXd>& u) {
  const double eu = signal_energy(u);
  if (eu == 0.0) return 0.0;
  const Trajectory tr = simulate(
      sys, [&ch](int i, double v) { return ch[static_cast<std::size_t>(i)](v); }, u, Eigen::VectorXd::Zero(sys.nx()));
  return std::sqrt(signal_energy(tr.y) / eu);
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

double empirical_gain_lb(const StateSpace& sys, const Sector& sector, const GainTrialOptions& options) {
  if (options.trials < 1) throw Error("empirical_gain_lb: trials must be >= 1");
  if (options.horizon < 1) throw Error("empirical_gain_lb: horizon must be >= 1");
  double best = 0.0;
  for (int trial = 0; trial < options.trials; ++trial) {
    std::mt19937_64 rng = trial_rng(options.seed, static_cast<std::uint64_t>(trial));
    const auto channels = random_channels(sector, sys.m(), rng);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    const int active = std::max(1, options.horizon / 2);
    std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(options.horizon), Eigen::VectorXd::Zero(sys.nu()));
    if (trial % 2 == 0) {
      for (int k = 0; k < active; ++k)
        for (int j = 0; j < sys.nu(); ++j) u[k](j) = normal(rng);
    } else {
      const double omega = std::numbers::pi * unit(rng);
      Eigen::VectorXd dir(sys.nu()), phase(sys.nu());
      for (int j = 0; j < sys.nu(); ++j) {
        dir(j) = normal(rng);
        phase(j) = 2.0 * std::numbers::pi * unit(rng);
      }
      for (int k = 0; k < active; ++k)
        for (int j = 0; j < sys.nu(); ++j) u[k](j) = dir(j) * std::cos(omega * k + phase(j));
    }
    best = std::max(best, trial_gain(sys, channels, u));
  }
  return best;
}

double empirical_gain_lb(const StateSpace& sys, const Sector& sector,
                         const std::vector<std::vector<Eigen::VectorXd>>& inputs, std::uint64_t seed) {
  double best = 0.0;
  for (std::size_t trial = 0; trial < inputs.size(); ++trial) {
    std::mt19937_64 rng = trial_rng(seed, trial);
    best = std::max(best, trial_gain(sys, random_channels(sector, sys.m(), rng), inputs[trial]));
  }
  return best;
}

}  // namespace qcgain
