#include <doctest.h>

#include <cmath>
#include <random>

#include "baectl/h2_optimizer.hpp"

using baectl::OptBounds;
using baectl::OptResult;
using baectl::PlantSpec;
using baectl::StateSpaceTF;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PlantSpec paper_plant() {
  PlantSpec spec;
  spec.omega_m = 2.0 * M_PI * 0.5e6;
  spec.kappa = 2.0 * M_PI * 1.0e6;
  spec.gamma = 2.0 * M_PI * 5.0e3;
  spec.g = 2.0 * M_PI * 0.3e6;
  spec.ports = 3;
  spec.include_damping = true;
  return spec;
}

MatrixXd random_matrix(std::mt19937& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

StateSpaceTF random_stable_tf(std::mt19937& rng, Eigen::Index n) {
  MatrixXd a = random_matrix(rng, n, n);
  const double shift = a.eigenvalues().real().maxCoeff();
  a -= (shift + 0.4) * MatrixXd::Identity(n, n);
  return StateSpaceTF(a, random_matrix(rng, n, 1), random_matrix(rng, 1, n),
                      MatrixXd::Zero(1, 1));
}

double mhz(double rad_per_sec) { return rad_per_sec / (2.0 * M_PI * 1e6); }

}  // namespace

TEST_CASE("Lyapunov solver closes the equation") {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 7;
    MatrixXd a = random_matrix(rng, n, n);
    a -= (a.eigenvalues().real().maxCoeff() + 0.5) * MatrixXd::Identity(n, n);
    const MatrixXd b = random_matrix(rng, n, 2);
    const MatrixXd q = b * b.transpose();
    const MatrixXd p = baectl::solve_lyapunov(a, q);
    CHECK((a * p + p * a.transpose() + q).norm() < 1e-10 * q.norm());
    CHECK((p - p.transpose()).norm() < 1e-12 * std::max(1.0, p.norm()));
  }
}

TEST_CASE("first-order H2 norm is analytic") {
  for (double a : {0.3, 1.0, 7.5}) {
    for (double k : {1.0, 2.5}) {
      const StateSpaceTF tf = StateSpaceTF::from_rational(
          (VectorXd(1) << k).finished(), (VectorXd(2) << 1.0, a).finished());
      CHECK(baectl::h2_norm(tf) == doctest::Approx(k / std::sqrt(2.0 * a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero transfer function has zero norm") {
  const StateSpaceTF zero = StateSpaceTF::from_rational(
      VectorXd::Zero(1), (VectorXd(3) << 1.0, 2.0, 1.0).finished());
  CHECK(baectl::h2_norm(zero) == 0.0);
  CHECK(baectl::h2_norm_quadrature(zero) == 0.0);
}

TEST_CASE("unstable or improper systems are rejected") {
  const StateSpaceTF unstable = StateSpaceTF::from_rational(
      (VectorXd(1) << 1.0).finished(), (VectorXd(2) << 1.0, -1.0).finished());
  CHECK_THROWS_AS(baectl::h2_norm(unstable), std::invalid_argument);
  CHECK_THROWS_AS(baectl::hinf_norm(unstable), std::invalid_argument);

  const StateSpaceTF improper(
      (MatrixXd(1, 1) << -1.0).finished(), (MatrixXd(1, 1) << 1.0).finished(),
      (MatrixXd(1, 1) << 1.0).finished(), (MatrixXd(1, 1) << 0.5).finished());
  CHECK_THROWS_AS(baectl::h2_norm(improper), std::invalid_argument);
}

TEST_CASE("Lyapunov and quadrature routes agree on random stable systems") {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const StateSpaceTF tf = random_stable_tf(rng, 2 + trial % 7);  // states <= 8
    const double direct = baectl::h2_norm(tf);
    const double integral = baectl::h2_norm_quadrature(tf);
    CHECK(std::abs(direct - integral) <= 1e-4 * std::max(direct, 1e-12));
  }
}

TEST_CASE("all-pass section has unit supremum gain") {
  const double corner = 0.5;
  const StateSpaceTF all_pass(
      (MatrixXd(1, 1) << -corner).finished(), (MatrixXd(1, 1) << 1.0).finished(),
      (MatrixXd(1, 1) << -2.0 * corner).finished(), (MatrixXd(1, 1) << 1.0).finished());
  CHECK(baectl::hinf_norm(all_pass) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("low-pass supremum gain sits at dc") {
  const StateSpaceTF tf = StateSpaceTF::from_rational(
      (VectorXd(1) << 3.0).finished(), (VectorXd(2) << 1.0, 2.0).finished());
  CHECK(baectl::hinf_norm(tf) == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("supremum gain agrees with a dense scan on random systems") {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 15; ++trial) {
    const StateSpaceTF tf = random_stable_tf(rng, 4);
    double dense = tf.eval(std::complex<double>(0.0, 0.0)).norm();
    for (double omega : baectl::log_grid(1e-5, 1e5, 40000))
      dense = std::max(dense, tf.eval(std::complex<double>(0.0, omega)).norm());
    const double refined = baectl::hinf_norm(tf);
    CHECK(refined >= dense * (1.0 - 1e-6));
    CHECK(refined <= dense * (1.0 + 1e-4) + 1e-12);
  }
}

TEST_CASE("back-action cost is smallest near the decoupling parameters") {
  const PlantSpec spec = paper_plant();
  const double ideal_kappa = spec.g * spec.g / spec.kappa;
  const double at_ideal =
      baectl::h2_norm(baectl::thermal_ratio(ideal_kappa, -spec.omega_m, spec));
  const double detuned =
      baectl::h2_norm(baectl::thermal_ratio(2.0 * ideal_kappa, -spec.omega_m, spec));
  CHECK(std::isfinite(at_ideal));
  CHECK(at_ideal < detuned);
}

TEST_CASE("optimizer reproduces the reported optimum") {
  const PlantSpec spec = paper_plant();
  OptBounds bounds;
  bounds.kappa_k_min = 2.0 * M_PI * 0.01e6;
  bounds.kappa_k_max = 2.0 * M_PI * 0.5e6;
  bounds.delta_min = -2.0 * M_PI * 1.0e6;
  bounds.delta_max = -2.0 * M_PI * 0.1e6;
  const OptResult result = baectl::optimize(spec, bounds);

  CHECK(mhz(result.kappa_k_opt) == doctest::Approx(0.093).epsilon(0.0).scale(1.0).epsilon(0.06));
  CHECK(std::abs(mhz(result.kappa_k_opt) - 0.093) < 0.005);
  CHECK(std::abs(mhz(result.delta_opt) - (-0.5)) < 0.01);
  CHECK_FALSE(result.on_boundary);
  CHECK(result.surface.size() == 3600);
  for (const auto& point : result.surface) {
    if (std::isfinite(point.norm)) CHECK(result.norm_opt <= point.norm + 1e-12);
  }
}

TEST_CASE("optimum approaches the lossless decoupling values as damping vanishes") {
  PlantSpec spec = paper_plant();
  spec.gamma = 2.0 * M_PI * 1.0;  // 1 Hz
  OptBounds bounds;
  bounds.kappa_k_min = 2.0 * M_PI * 0.01e6;
  bounds.kappa_k_max = 2.0 * M_PI * 0.5e6;
  bounds.delta_min = -2.0 * M_PI * 1.0e6;
  bounds.delta_max = -2.0 * M_PI * 0.1e6;
  const OptResult result = baectl::optimize(spec, bounds, 40, 40, false);
  CHECK(std::abs(mhz(result.kappa_k_opt) - 0.09) < 2e-3);
  CHECK(std::abs(mhz(result.delta_opt) + 0.5) < 2e-3);
}

TEST_CASE("optimizer result is a local minimum") {
  const PlantSpec spec = paper_plant();
  OptBounds bounds;
  bounds.kappa_k_min = 2.0 * M_PI * 0.01e6;
  bounds.kappa_k_max = 2.0 * M_PI * 0.5e6;
  bounds.delta_min = -2.0 * M_PI * 1.0e6;
  bounds.delta_max = -2.0 * M_PI * 0.1e6;
  const OptResult result = baectl::optimize(spec, bounds, 30, 30, false);
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      if (dx == 0 && dy == 0) continue;
      const double kappa_probe = result.kappa_k_opt * (1.0 + 1e-3 * dx);
      const double delta_probe = result.delta_opt * (1.0 + 1e-3 * dy);
      const double probe =
          baectl::h2_norm(baectl::thermal_ratio(kappa_probe, delta_probe, spec));
      CHECK(probe >= result.norm_opt - 1e-9 * result.norm_opt);
    }
  }
}

TEST_CASE("bounds that exclude the optimum land on the boundary") {
  const PlantSpec spec = paper_plant();
  OptBounds bounds;
  bounds.kappa_k_min = 2.0 * M_PI * 0.3e6;  // optimum sits near 0.093 MHz
  bounds.kappa_k_max = 2.0 * M_PI * 0.5e6;
  bounds.delta_min = -2.0 * M_PI * 1.0e6;
  bounds.delta_max = -2.0 * M_PI * 0.1e6;
  const OptResult result = baectl::optimize(spec, bounds, 20, 20, false);
  CHECK(result.on_boundary);
}

TEST_CASE("grid scan is reproducible bit for bit") {
  const PlantSpec spec = paper_plant();
  OptBounds bounds;
  bounds.kappa_k_min = 2.0 * M_PI * 0.05e6;
  bounds.kappa_k_max = 2.0 * M_PI * 0.2e6;
  bounds.delta_min = -2.0 * M_PI * 0.7e6;
  bounds.delta_max = -2.0 * M_PI * 0.3e6;
  const OptResult a = baectl::optimize(spec, bounds, 12, 12, true);
  const OptResult b = baectl::optimize(spec, bounds, 12, 12, true);
  CHECK(a.kappa_k_opt == b.kappa_k_opt);
  CHECK(a.delta_opt == b.delta_opt);
  CHECK(a.norm_opt == b.norm_opt);
  REQUIRE(a.surface.size() == b.surface.size());
  for (std::size_t i = 0; i < a.surface.size(); ++i) {
    CHECK(a.surface[i].norm == b.surface[i].norm);
  }
}

TEST_CASE("degenerate bounds are a usage error") {
  OptBounds bounds;  // all zero
  CHECK_THROWS_AS(baectl::optimize(paper_plant(), bounds), std::invalid_argument);
}
