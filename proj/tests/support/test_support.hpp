#pragma once

// Reference computations used by the tests. Everything here is written
// against plain Eigen so that it shares no code with the library paths it
// checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcgain/cli/io.hpp"
#include "qcgain/system.hpp"

#ifndef QCGAIN_TEST_DATA_DIR
#error "QCGAIN_TEST_DATA_DIR must be defined"
#endif

namespace qcgain::testing {

inline std::string data_path(const std::string& name) { return std::string(QCGAIN_TEST_DATA_DIR) + "/" + name; }

inline StateSpace example_plant() { return cli::parse_system_file(data_path("example_plant.json")); }

// Gains of the shipped plant at sector [0, 1], frozen from
// tests/reference/external_gains.py (cvxpy + Clarabel).
inline constexpr double kFrozenGammaMd = 15.1746;
inline constexpr double kFrozenGammaMc = 11.1271;
inline constexpr double kFrozenGammaMinc = 10.0757;
inline constexpr double kFrozenRelTol = 5e-4;
// Peak of |G(e^{jw})| on a 2e5-point grid (numpy).
inline constexpr double kFrozenNominal = 1.185678;

inline StateSpace zero_system(int nx, int m, int nu, int ny) {
  StateSpaceData d;
  d.A = Eigen::MatrixXd::Zero(nx, nx);
  d.B1 = Eigen::MatrixXd::Zero(nx, m);
  d.B2 = Eigen::MatrixXd::Zero(nx, nu);
  d.C1 = Eigen::MatrixXd::Zero(m, nx);
  d.C2 = Eigen::MatrixXd::Zero(ny, nx);
  d.D11 = Eigen::MatrixXd::Zero(m, m);
  d.D12 = Eigen::MatrixXd::Zero(m, nu);
  d.D21 = Eigen::MatrixXd::Zero(ny, m);
  d.D22 = Eigen::MatrixXd::Zero(ny, nu);
  return StateSpace(d, Dims{nx, m, nu, ny});
}

/// Largest singular value of C (zI - A)^{-1} B + D on the unit circle,
/// gridded and then refined by golden-section search around the best point.
inline double hinf_frequency_sweep(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                                   const Eigen::MatrixXd& D, int grid = 20000) {
  using cd = std::complex<double>;
  const Eigen::Index n = A.rows();
  auto sigma = [&](double w) {
    const cd z = std::polar(1.0, w);
    const Eigen::MatrixXcd zI_A = z * Eigen::MatrixXcd::Identity(n, n) - A.cast<cd>();
    const Eigen::MatrixXcd G = C.cast<cd>() * zI_A.partialPivLu().solve(B.cast<cd>()) + D.cast<cd>();
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(G).singularValues()(0);
  };
  double best = 0.0, best_w = 0.0;
  for (int k = 0; k <= grid; ++k) {
    const double w = std::numbers::pi * k / grid;
    const double s = sigma(w);
    if (s > best) best = s, best_w = w;
  }
  const double step = std::numbers::pi / grid;
  double lo = std::max(0.0, best_w - step), hi = std::min(std::numbers::pi, best_w + step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    if (sigma(a) > sigma(b)) hi = b; else lo = a;
  }
  return std::max(best, sigma(0.5 * (lo + hi)));
}

/// Closed loop under the linear map w = g v (same g on every channel).
struct LinearLoop {
  Eigen::MatrixXd A, B, C, D;
};

inline LinearLoop close_loop(const StateSpace& sys, double g) {
  const int m = sys.m();
  // w = (I - g D11)^{-1} g (C1 x + D12 u)
  const Eigen::MatrixXd K = (Eigen::MatrixXd::Identity(m, m) - g * sys.D11()).inverse() * g;
  const Eigen::MatrixXd Wx = K * sys.C1(), Wu = K * sys.D12();
  return {sys.A() + sys.B1() * Wx, sys.B2() + sys.B1() * Wu, sys.C2() + sys.D21() * Wx, sys.D22() + sys.D21() * Wu};
}

struct LinearRun {
  std::vector<Eigen::VectorXd> x, y;
};

inline LinearRun simulate_linear(const LinearLoop& loop, const std::vector<Eigen::VectorXd>& u,
                                 const Eigen::VectorXd& x0) {
  LinearRun r;
  r.x.push_back(x0);
  for (const auto& uk : u) {
    r.y.push_back(loop.C * r.x.back() + loop.D * uk);
    r.x.push_back(loop.A * r.x.back() + loop.B * uk);
  }
  return r;
}

inline double sum_sq(const std::vector<Eigen::VectorXd>& seq) {
  double s = 0.0;
  for (const auto& v : seq) s += v.squaredNorm();
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace qcgain::testing
