#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "baectl/bae_synthesis.hpp"

namespace baectl {

/// State-space realization of a transfer function, evaluated by linear solve.
class StateSpaceTF {
 public:
  StateSpaceTF();
  StateSpaceTF(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
               Eigen::MatrixXd d, std::string label = {});

  /// Scalar rational function from polynomial coefficients in descending
  /// powers of s; realized in controllable canonical form.  The denominator
  /// degree must exceed the numerator degree (strictly proper).
  static StateSpaceTF from_rational(const Eigen::VectorXd& numerator,
                                    const Eigen::VectorXd& denominator,
                                    std::string label = {});

  const Eigen::MatrixXd& A() const { return a_; }
  const Eigen::MatrixXd& B() const { return b_; }
  const Eigen::MatrixXd& C() const { return c_; }
  const Eigen::MatrixXd& D() const { return d_; }
  const std::string& label() const { return label_; }
  Eigen::Index order() const { return a_.rows(); }

  /// C (sI - A)^{-1} B + D.  Throws if s is within 1e-9 (relative) of the
  /// spectrum of A.
  Eigen::MatrixXcd eval(std::complex<double> s) const;
  std::complex<double> eval_scalar(std::complex<double> s) const;

  const Eigen::VectorXcd& poles() const { return poles_; }
  bool is_stable(double margin = 1e-12) const;
  bool is_strictly_proper(double tol = 0.0) const;

 private:
  Eigen::MatrixXd a_, b_, c_, d_;
  Eigen::VectorXcd poles_;
  std::string label_;
};

/// The three scalar transfer functions of the sensing chain: force, back-action
/// quadrature and shot quadrature into the measured output quadrature.
struct SensingTransfers {
  StateSpaceTF from_force;
  StateSpaceTF from_backaction;
  StateSpaceTF from_shot;
};

SensingTransfers sensing_transfers(const ClosedLoop& loop);
SensingTransfers sensing_transfers(const QuadratureSystem& plant);

/// Probe-field statistics.  squeeze_r tilts the quadrature variances to
/// (e^r / 2, e^{-r} / 2), keeping their product at the Heisenberg bound 1/4;
/// thermal_nbar is the flat force-noise floor.
struct NoiseSpec {
  double squeeze_r = 0.0;
  double thermal_nbar = 0.0;
};

/// Standard quantum limit of the normalized measurement noise.
/// Ideal: |w^2 - w_m^2| / (gamma w_m); damped: |(w^2 - w_m^2) - i gamma w| / (gamma w_m).
double sql(double omega, const PlantSpec& spec, bool damped);

/// Normalized noise power at s = i omega:
///   nbar + |Xi_Q / Xi_f|^2 e^r / 2 + |Xi_P / Xi_f|^2 e^{-r} / 2,
/// optionally with the thermal floor subtracted for plotting.
double noise_psd(const SensingTransfers& transfers, double omega,
                 const NoiseSpec& noise, bool subtract_floor = false);

/// Back-action coefficient Xi_Q / Xi_f of the thermal closed loop as a
/// minimal third-order realization of
///   -sqrt(k) { k kK D (s^2 + gamma s + wm^2) + g^2 wm (s^2 + D^2) }
///   / [ g wm sqrt(gamma) { (s + k/2)(s^2 + D^2) + k kK s } ].
StateSpaceTF thermal_ratio(double kappa_k, double delta, const PlantSpec& spec);

struct BaeReport {
  bool geometric_pass = false;
  bool numeric_pass = false;
  double max_residual = 0.0;
};

/// Checks back-action evasion two ways: the subspace condition (subspace
/// reachable from the disturbance contained in the unobservable subspace of
/// the regulated output) and a frequency sweep of
/// |Xi_Q(iw)| / (1 + |Xi_f(iw)|) over n_freq points log-spaced across
/// [1e-3, 1e3] * omega_scale, thresholded at 1e-8.
BaeReport verify_bae(const ClosedLoop& loop, double omega_scale,
                     int n_freq = 200);

std::vector<double> log_grid(double lo, double hi, int n);

struct SpectrumRow {
  double omega;        // rad/s
  double psd;          // full normalized PSD
  double sql;          // standard quantum limit at this frequency
  double psd_no_floor; // PSD with the thermal floor subtracted
};

/// CSV with header "omega_hz,S,SQL,S_minus_floor", 9 significant digits.
void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumRow>& rows);

}  // namespace baectl
