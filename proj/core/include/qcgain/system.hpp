#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qcgain {

/// Sector [alpha, beta]: (phi(x) - alpha x)(beta x - phi(x)) >= 0.
class Sector {
 public:
  Sector(double alpha, double beta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double center() const { return 0.5 * (alpha_ + beta_); }
  double radius() const { return 0.5 * (beta_ - alpha_); }

  /// (w - alpha v)(beta v - w); nonnegative iff (v, w) is in the sector.
  double margin(double v, double w) const { return (w - alpha_ * v) * (beta_ * v - w); }
  bool contains(double v, double w, double tol = 1e-9) const { return margin(v, w) >= -tol; }
  bool contains_slope(double g, double tol = 1e-12) const { return g >= alpha_ - tol && g <= beta_ + tol; }

  friend bool operator==(const Sector&, const Sector&) = default;

 private:
  double alpha_;
  double beta_;
};

struct Dims {
  int nx = 0;
  int m = 0;
  int nu = 0;
  int ny = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct StateSpaceData {
  Eigen::MatrixXd A, B1, B2, C1, C2, D11, D12, D21, D22;
};

/// Discrete-time plant G with performance channel u -> y and loop channel
/// w -> v closed through w = Phi(v):
///   x+ = A x + B1 w + B2 u
///   v  = C1 x + D11 w + D12 u
///   y  = C2 x + D21 w + D22 u
class StateSpace {
 public:
  /// Validates every block against `dims`.
  StateSpace(StateSpaceData data, Dims dims);
  /// Infers dims from A, B1, B2 and C2, then validates.
  explicit StateSpace(StateSpaceData data);

  const Dims& dims() const { return dims_; }
  int nx() const { return dims_.nx; }
  int m() const { return dims_.m; }
  int nu() const { return dims_.nu; }
  int ny() const { return dims_.ny; }

  const Eigen::MatrixXd& A() const { return d_.A; }
  const Eigen::MatrixXd& B1() const { return d_.B1; }
  const Eigen::MatrixXd& B2() const { return d_.B2; }
  const Eigen::MatrixXd& C1() const { return d_.C1; }
  const Eigen::MatrixXd& C2() const { return d_.C2; }
  const Eigen::MatrixXd& D11() const { return d_.D11; }
  const Eigen::MatrixXd& D12() const { return d_.D12; }
  const Eigen::MatrixXd& D21() const { return d_.D21; }
  const Eigen::MatrixXd& D22() const { return d_.D22; }
  const StateSpaceData& data() const { return d_; }

  /// Set when D11 != 0: the loop is implicit and well-posedness is assumed.
  bool well_posedness_warning() const { return d11_warning_; }

  /// Frobenius norm of all nine blocks stacked.
  double data_norm() const;

 private:
  void validate();

  StateSpaceData d_;
  Dims dims_;
  bool d11_warning_ = false;
};

/// phi(channel, v) for a non-repeated static nonlinearity.
using ChannelMap = std::function<double(int channel, double v)>;

struct Trajectory {
  std::vector<Eigen::VectorXd> u;  // T
  std::vector<Eigen::VectorXd> x;  // T + 1
  std::vector<Eigen::VectorXd> v;  // T
  std::vector<Eigen::VectorXd> w;  // T
  std::vector<Eigen::VectorXd> y;  // T
};

struct FixedPointOptions {
  double damping = 0.5;
  int max_iterations = 500;
  double tolerance = 1e-10;
};

/// Simulates the closed loop. With D11 != 0 the loop equation is solved per
/// step by damped fixed-point iteration; throws FixedPointDivergence if that
/// fails.
Trajectory simulate(const StateSpace& sys, const ChannelMap& phi, const std::vector<Eigen::VectorXd>& u,
                    const Eigen::VectorXd& x0, const FixedPointOptions& fp = {});

double spectral_radius(const Eigen::MatrixXd& a);

/// H-infinity norm of (A, B2, C2, D22) by bisection on the bounded-real LMI.
/// Throws UnstableNominal if the spectral radius of A is >= 1 - 1e-9.
double nominal_hinf_norm(const StateSpace& sys, double rel_tol = 1e-6);

/// Two-slope map through the origin: slope_neg on x <= 0, slope_pos on x > 0.
struct TwoSlopeChannel {
  double slope_neg;
  double slope_pos;
  double operator()(double x) const { return x <= 0.0 ? slope_neg * x : slope_pos * x; }
};

struct GainTrialOptions {
  int trials = 100;
  int horizon = 200;
  std::uint64_t seed = 20240229;
};

/// Largest observed ||y||/||u|| over random sector nonlinearities and random
/// inputs (x0 = 0). A lower bound on the worst-case gain over the sector.
double empirical_gain_lb(const StateSpace& sys, const Sector& sector, const GainTrialOptions& options = {});

/// Same, over a caller-supplied input set; each input gets its own random
/// nonlinearity. An empty set gives 0.
double empirical_gain_lb(const StateSpace& sys, const Sector& sector,
                         const std::vector<std::vector<Eigen::VectorXd>>& inputs, std::uint64_t seed = 20240229);

}  // namespace qcgain
