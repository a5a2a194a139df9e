#include "baectl/spectra.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace baectl {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

VectorXcd eigenvalues_of(const MatrixXd& a) {
  if (a.rows() == 0) return VectorXcd(0);
  return Eigen::EigenSolver<MatrixXd>(a, /*computeEigenvectors=*/false).eigenvalues();
}

}  // namespace

StateSpaceTF::StateSpaceTF()
    : a_(0, 0), b_(0, 1), c_(1, 0), d_(Eigen::MatrixXd::Zero(1, 1)) {}

StateSpaceTF::StateSpaceTF(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
                           Eigen::MatrixXd d, std::string label)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)),
      label_(std::move(label)) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows() || c_.cols() != a_.rows() ||
      d_.rows() != c_.rows() || d_.cols() != b_.cols())
    throw std::invalid_argument("StateSpaceTF: inconsistent dimensions");
  poles_ = eigenvalues_of(a_);
}

StateSpaceTF StateSpaceTF::from_rational(const Eigen::VectorXd& numerator,
                                         const Eigen::VectorXd& denominator,
                                         std::string label) {
  if (denominator.size() < 1 || denominator(0) == 0.0)
    throw std::invalid_argument("StateSpaceTF::from_rational: bad denominator");
  const Eigen::Index n = denominator.size() - 1;
  if (numerator.size() > n)
    throw std::invalid_argument("StateSpaceTF::from_rational: not strictly proper");
  if (n == 0 || numerator.size() == 0 || numerator.norm() == 0.0)
    return StateSpaceTF();  // the zero function

  // Controllable canonical form for num(s)/den(s), den made monic, with the
  // frequency axis rescaled so the companion entries stay of order one.  The
  // raw companion matrix of a rad/s-scale polynomial spans many decades and
  // defeats unbalanced eigensolvers.
  const VectorXd den = denominator / denominator(0);
  VectorXd num = VectorXd::Zero(n);
  num.tail(numerator.size()) = numerator / denominator(0);

  double scale = 1.0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    if (den(k) != 0.0)
      scale = std::max(scale, std::pow(std::abs(den(k)), 1.0 / k));
  }

  MatrixXd a = MatrixXd::Zero(n, n);
  a.topRightCorner(n - 1, n - 1).setIdentity();
  for (Eigen::Index k = 0; k < n; ++k)
    a(n - 1, k) = -den(n - k) / std::pow(scale, n - k);
  a *= scale;
  MatrixXd b = MatrixXd::Zero(n, 1);
  b(n - 1, 0) = std::sqrt(scale);
  MatrixXd c(1, n);
  for (Eigen::Index k = 0; k < n; ++k)
    c(0, k) = num(n - 1 - k) / std::pow(scale, n - k) * std::sqrt(scale);
  return StateSpaceTF(a, b, c, MatrixXd::Zero(1, 1), std::move(label));
}

Eigen::MatrixXcd StateSpaceTF::eval(std::complex<double> s) const {
  if (order() == 0) return d_.cast<complex<double>>();
  for (Eigen::Index i = 0; i < poles_.size(); ++i) {
    if (std::abs(s - poles_(i)) < 1e-9 * std::max(1.0, std::abs(poles_(i))))
      throw std::runtime_error("StateSpaceTF::eval: s too close to a pole");
  }
  const MatrixXcd resolvent_arg =
      s * MatrixXcd::Identity(order(), order()) - a_.cast<complex<double>>();
  const MatrixXcd x = resolvent_arg.partialPivLu().solve(b_.cast<complex<double>>());
  return c_.cast<complex<double>>() * x + d_.cast<complex<double>>();
}

std::complex<double> StateSpaceTF::eval_scalar(std::complex<double> s) const {
  const MatrixXcd v = eval(s);
  if (v.rows() != 1 || v.cols() != 1)
    throw std::runtime_error("StateSpaceTF::eval_scalar: transfer function is not scalar");
  return v(0, 0);
}

bool StateSpaceTF::is_stable(double margin) const {
  for (Eigen::Index i = 0; i < poles_.size(); ++i)
    if (poles_(i).real() >= -margin) return false;
  return true;
}

bool StateSpaceTF::is_strictly_proper(double tol) const { return d_.norm() <= tol; }

SensingTransfers sensing_transfers(const ClosedLoop& loop) {
  if (loop.force.size() == 0)
    throw std::invalid_argument("sensing_transfers: loop lacks a force channel");
  const MatrixXd h = loop.regulated;
  SensingTransfers tf;
  tf.from_force = StateSpaceTF(loop.A, loop.force, h, MatrixXd::Zero(1, 1), "f->out");
  tf.from_backaction = StateSpaceTF(loop.A, loop.disturbance, h,
                                    loop.D.block(1, 0, 1, 1), "Q->out");
  tf.from_shot =
      StateSpaceTF(loop.A, loop.B.col(1), h, loop.D.block(1, 1, 1, 1), "P->out");
  return tf;
}

SensingTransfers sensing_transfers(const QuadratureSystem& plant) {
  if (!plant.force || !plant.regulated)
    throw std::invalid_argument("sensing_transfers: plant lacks force or regulated labels");
  ClosedLoop open;
  open.A = plant.A;
  open.B = plant.B.at(0);
  open.C = plant.C.at(0);
  open.D = Eigen::Matrix2d::Identity();
  open.force = *plant.force;
  open.disturbance = plant.B.at(0).col(0);
  open.regulated = *plant.regulated;
  open.plant_dim = plant.state_dim();
  open.conforming = true;
  return sensing_transfers(open);
}

double sql(double omega, const PlantSpec& spec, bool damped) {
  if (spec.gamma <= 0.0) throw std::invalid_argument("sql: gamma must be positive");
  const double detune = omega * omega - spec.omega_m * spec.omega_m;
  const double scale = spec.gamma * spec.omega_m;
  if (!damped) return std::abs(detune) / scale;
  return std::hypot(detune, spec.gamma * omega) / scale;
}

double noise_psd(const SensingTransfers& transfers, double omega,
                 const NoiseSpec& noise, bool subtract_floor) {
  const complex<double> s(0.0, omega);
  const complex<double> xi_f = transfers.from_force.eval_scalar(s);
  if (std::abs(xi_f) == 0.0)
    throw std::runtime_error("noise_psd: force transfer vanishes at this frequency");
  const double backaction = std::norm(transfers.from_backaction.eval_scalar(s) / xi_f);
  const double shot = std::norm(transfers.from_shot.eval_scalar(s) / xi_f);
  const double psd = backaction * std::exp(noise.squeeze_r) / 2.0 +
                     shot * std::exp(-noise.squeeze_r) / 2.0;
  return subtract_floor ? psd : psd + noise.thermal_nbar;
}

StateSpaceTF thermal_ratio(double kappa_k, double delta, const PlantSpec& spec) {
  if (spec.gamma <= 0.0)
    throw std::invalid_argument("thermal_ratio: gamma must be positive");
  const double k = spec.kappa;
  const double wm = spec.omega_m;
  const double g = spec.g;
  const double kk = k * kappa_k;

  Eigen::Vector3d num;
  num << kk * delta + g * g * wm,
         kk * delta * spec.gamma,
         kk * delta * wm * wm + g * g * wm * delta * delta;
  num *= -std::sqrt(k);

  Eigen::Vector4d den;
  den << 1.0,
         k / 2.0,
         delta * delta + kk,
         (k / 2.0) * delta * delta;
  den *= g * wm * std::sqrt(spec.gamma);

  return StateSpaceTF::from_rational(num, den, "Qtilde/ftilde");
}

BaeReport verify_bae(const ClosedLoop& loop, double omega_scale, int n_freq) {
  BaeReport report;

  // Geometric route: smallest invariant subspace fed by the disturbance must
  // stay inside the largest invariant subspace the output cannot see.
  const Eigen::Index n = loop.A.rows();
  const Subspace full = Subspace::full(n);
  const Subspace reachable = minimal_conditioned_invariant(
      loop.A, full, Subspace::image(loop.disturbance));
  const Subspace unobservable = maximal_controlled_invariant(
      loop.A, Subspace::zero(n), Subspace::kernel(loop.regulated));
  report.geometric_pass = unobservable.contains(reachable);

  // Numeric route: relative magnitude sweep of the back-action transfer.
  const SensingTransfers tf = sensing_transfers(loop);
  report.max_residual = 0.0;
  for (double omega : log_grid(1e-3 * omega_scale, 1e3 * omega_scale, n_freq)) {
    const complex<double> s(0.0, omega);
    const double xi_q = std::abs(tf.from_backaction.eval_scalar(s));
    const double xi_f = std::abs(tf.from_force.eval_scalar(s));
    report.max_residual = std::max(report.max_residual, xi_q / (1.0 + xi_f));
  }
  report.numeric_pass = report.max_residual < 1e-8;
  return report;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (lo <= 0.0 || hi <= lo || n < 2)
    throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> grid(n);
  const double step = std::log10(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) grid[i] = lo * std::pow(10.0, step * i);
  return grid;
}

void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumRow>& rows) {
  out << "omega_hz,S,SQL,S_minus_floor\n";
  char line[160];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%.8e,%.8e,%.8e,%.8e\n",
                  row.omega / (2.0 * M_PI), row.psd, row.sql, row.psd_no_floor);
    out << line;
  }
}

}  // namespace baectl
