#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "baectl/spectra.hpp"

namespace baectl {

/// Solves A P + P A^T + Q = 0 for symmetric Q and Hurwitz A.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

/// H2 norm sqrt((1/2pi) int |Xi(iw)|^2 dw) through the controllability
/// Gramian: A P + P A^T + B B^T = 0, norm = sqrt(trace(C P C^T)).
/// Throws for unstable or non-strictly-proper systems.
double h2_norm(const StateSpaceTF& tf);

/// Independent H2 evaluation by adaptive frequency quadrature, truncated where
/// the integrand falls below 1e-12 of its peak.  Cross-check for h2_norm.
double h2_norm_quadrature(const StateSpaceTF& tf, double rel_tol = 1e-8);

/// max_w |Xi(iw)|, by a log-spaced scan refined with golden-section search.
double hinf_norm(const StateSpaceTF& tf, double rel_tol = 1e-6);

struct OptBounds {
  double kappa_k_min = 0.0;
  double kappa_k_max = 0.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
};

struct SurfacePoint {
  double kappa_k;  // rad/s
  double delta;    // rad/s
  double norm;     // +inf when the realization is unstable
};

struct OptResult {
  double kappa_k_opt = 0.0;
  double delta_opt = 0.0;
  double norm_opt = 0.0;
  int iterations = 0;
  bool on_boundary = false;
  std::vector<SurfacePoint> surface;
};

/// Minimizes ||Xi_Q / Xi_f||_2 of the thermal closed loop over the controller
/// decay and detuning: coarse grid scan followed by Nelder-Mead refinement
/// from the best grid point.  Unstable parameter points cost +inf so the scan
/// is total.  Deterministic for fixed inputs.
OptResult optimize(const PlantSpec& spec, const OptBounds& bounds,
                   int grid_kappa = 60, int grid_delta = 60,
                   bool keep_surface = true);

}  // namespace baectl
