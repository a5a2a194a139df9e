#include "baectl/h2_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace baectl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::complex;

constexpr double kInf = std::numeric_limits<double>::infinity();

double frequency_scale(const StateSpaceTF& tf) {
  double scale = 1.0;
  for (Eigen::Index i = 0; i < tf.poles().size(); ++i)
    scale = std::max(scale, std::abs(tf.poles()(i)));
  return scale;
}

double integrand(const StateSpaceTF& tf, double omega) {
  return tf.eval(complex<double>(0.0, omega)).squaredNorm();
}

double adaptive_simpson(const std::function<double(double)>& f, double lo,
                        double hi, double f_lo, double f_mid, double f_hi,
                        double abs_tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lmid = 0.5 * (lo + mid);
  const double rmid = 0.5 * (mid + hi);
  const double f_lmid = f(lmid);
  const double f_rmid = f(rmid);
  const double whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
  const double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lmid + f_mid);
  const double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rmid + f_hi);
  const double split = left + right;
  if (depth <= 0 || std::abs(split - whole) <= 15.0 * abs_tol) {
    return split + (split - whole) / 15.0;
  }
  return adaptive_simpson(f, lo, mid, f_lo, f_lmid, f_mid, abs_tol / 2.0, depth - 1) +
         adaptive_simpson(f, mid, hi, f_mid, f_rmid, f_hi, abs_tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol) {
  const double mid = 0.5 * (lo + hi);
  return adaptive_simpson(f, lo, hi, f(lo), f(mid), f(hi), abs_tol, 48);
}

void require_h2_admissible(const StateSpaceTF& tf) {
  if (!tf.is_strictly_proper(0.0) &&
      tf.D().norm() > 1e-14 * std::max(1.0, tf.C().norm() * tf.B().norm()))
    throw std::invalid_argument("h2_norm: infinite H2 norm (direct feedthrough)");
  if (!tf.is_stable()) throw std::invalid_argument("h2_norm: system is unstable");
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  if (n == 0) return MatrixXd(0, 0);
  // Vectorized form (I (x) A + A (x) I) vec(P) = -vec(Q); fine for the small
  // state dimensions used here.
  MatrixXd big = MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    big.block(i * n, i * n, n, n) = a;                    // I (x) A
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      big.block(i * n, j * n, n, n).diagonal().array() += a(i, j);  // A (x) I
  const VectorXd rhs = -Eigen::Map<const VectorXd>(q.data(), n * n);
  const VectorXd x = big.partialPivLu().solve(rhs);
  MatrixXd p = Eigen::Map<const MatrixXd>(x.data(), n, n);
  return 0.5 * (p + p.transpose());
}

double h2_norm(const StateSpaceTF& tf) {
  require_h2_admissible(tf);
  if (tf.order() == 0) return 0.0;
  const MatrixXd gramian = solve_lyapunov(tf.A(), tf.B() * tf.B().transpose());
  const double value = (tf.C() * gramian * tf.C().transpose()).trace();
  return std::sqrt(std::max(0.0, value));
}

double h2_norm_quadrature(const StateSpaceTF& tf, double rel_tol) {
  require_h2_admissible(tf);
  if (tf.order() == 0) return 0.0;

  const double scale = frequency_scale(tf);
  // Locate the peak of |Xi(iw)|^2 on a coarse log sweep (plus w = 0).
  double peak = integrand(tf, 0.0);
  for (double omega : log_grid(1e-6 * scale, 1e6 * scale, 400))
    peak = std::max(peak, integrand(tf, omega));
  if (peak == 0.0) return 0.0;

  double hi = 1e6 * scale;
  while (integrand(tf, hi) > 1e-12 * peak) hi *= 10.0;

  // Rough trapezoid total fixes the absolute tolerance for every segment.
  const double lo = 1e-9 * scale;
  double rough = integrand(tf, 0.0) * lo;
  {
    const std::vector<double> sweep = log_grid(lo, hi, 2000);
    for (std::size_t i = 1; i < sweep.size(); ++i)
      rough += 0.5 * (integrand(tf, sweep[i - 1]) + integrand(tf, sweep[i])) *
               (sweep[i] - sweep[i - 1]);
  }
  const double abs_tol = rel_tol * std::max(rough, 1e-300);

  // Integrate decade by decade so the resonant peaks are well resolved.
  double total = integrate([&](double w) { return integrand(tf, w); }, 0.0, lo,
                           abs_tol);
  double left = lo;
  while (left < hi) {
    const double right = std::min(left * 10.0, hi);
    total += integrate([&](double w) { return integrand(tf, w); }, left, right,
                       abs_tol);
    left = right;
  }
  return std::sqrt(total / M_PI);  // half-line integral, conjugate symmetry
}

double hinf_norm(const StateSpaceTF& tf, double rel_tol) {
  if (!tf.is_stable()) throw std::invalid_argument("hinf_norm: system is unstable");
  if (tf.order() == 0) return tf.D().norm();

  const double scale = frequency_scale(tf);
  const std::vector<double> grid = log_grid(1e-6 * scale, 1e6 * scale, 2000);
  auto gain = [&](double w) { return tf.eval(complex<double>(0.0, w)).norm(); };

  double best = gain(0.0);
  std::size_t best_idx = 0;
  bool best_at_zero = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = gain(grid[i]);
    if (g > best) {
      best = g;
      best_idx = i;
      best_at_zero = false;
    }
  }
  const double tail = tf.D().norm();
  if (tail > best) return tail;
  if (best_at_zero) return best;

  // Golden-section refinement on the bracketing grid interval.
  double lo = grid[best_idx > 0 ? best_idx - 1 : 0];
  double hi = grid[std::min(best_idx + 1, grid.size() - 1)];
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = gain(x1), f2 = gain(x2);
  while ((hi - lo) > rel_tol * lo) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = gain(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = gain(x1);
    }
  }
  return std::max({best, f1, f2});
}

OptResult optimize(const PlantSpec& spec, const OptBounds& bounds,
                   int grid_kappa, int grid_delta, bool keep_surface) {
  if (!(bounds.kappa_k_min > 0.0) || !(bounds.kappa_k_max > bounds.kappa_k_min) ||
      !(bounds.delta_max > bounds.delta_min))
    throw std::invalid_argument("optimize: bounds must give positive decay range and nonempty detuning range");
  if (grid_kappa < 2 || grid_delta < 2)
    throw std::invalid_argument("optimize: grid must be at least 2x2");

  auto cost = [&](double kappa_k, double delta) -> double {
    if (kappa_k < bounds.kappa_k_min || kappa_k > bounds.kappa_k_max ||
        delta < bounds.delta_min || delta > bounds.delta_max)
      return kInf;
    try {
      return h2_norm(thermal_ratio(kappa_k, delta, spec));
    } catch (const std::exception&) {
      return kInf;  // unstable or degenerate point
    }
  };

  OptResult result;
  double best_cost = kInf;
  double best_kappa = bounds.kappa_k_min, best_delta = bounds.delta_min;
  const double dk = (bounds.kappa_k_max - bounds.kappa_k_min) / (grid_kappa - 1);
  const double dd = (bounds.delta_max - bounds.delta_min) / (grid_delta - 1);
  if (keep_surface) result.surface.reserve(static_cast<std::size_t>(grid_kappa) * grid_delta);
  for (int i = 0; i < grid_kappa; ++i) {
    const double kappa_k = bounds.kappa_k_min + dk * i;
    for (int j = 0; j < grid_delta; ++j) {
      const double delta = bounds.delta_min + dd * j;
      const double value = cost(kappa_k, delta);
      if (keep_surface) result.surface.push_back({kappa_k, delta, value});
      if (value < best_cost) {
        best_cost = value;
        best_kappa = kappa_k;
        best_delta = delta;
      }
    }
  }
  if (!std::isfinite(best_cost))
    throw std::runtime_error("optimize: every grid point is unstable");

  // Nelder-Mead refinement from the best grid cell.
  std::array<Eigen::Vector2d, 3> simplex = {
      Eigen::Vector2d(best_kappa, best_delta),
      Eigen::Vector2d(best_kappa + 0.5 * dk, best_delta),
      Eigen::Vector2d(best_kappa, best_delta + 0.5 * dd)};
  std::array<double, 3> values;
  for (int i = 0; i < 3; ++i) values[i] = cost(simplex[i](0), simplex[i](1));

  int iterations = 0;
  for (; iterations < 500; ++iterations) {
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values[a] < values[b]; });
    const int lo = order[0], mid = order[1], hi = order[2];
    const double spread = values[hi] - values[lo];
    if (spread < 1e-10 * (1.0 + std::abs(values[lo]))) break;

    const Eigen::Vector2d centroid = 0.5 * (simplex[lo] + simplex[mid]);
    const Eigen::Vector2d reflected = centroid + (centroid - simplex[hi]);
    const double f_reflected = cost(reflected(0), reflected(1));
    if (f_reflected < values[lo]) {
      const Eigen::Vector2d expanded = centroid + 2.0 * (centroid - simplex[hi]);
      const double f_expanded = cost(expanded(0), expanded(1));
      if (f_expanded < f_reflected) {
        simplex[hi] = expanded;
        values[hi] = f_expanded;
      } else {
        simplex[hi] = reflected;
        values[hi] = f_reflected;
      }
    } else if (f_reflected < values[mid]) {
      simplex[hi] = reflected;
      values[hi] = f_reflected;
    } else {
      const Eigen::Vector2d contracted = centroid + 0.5 * (simplex[hi] - centroid);
      const double f_contracted = cost(contracted(0), contracted(1));
      if (f_contracted < values[hi]) {
        simplex[hi] = contracted;
        values[hi] = f_contracted;
      } else {
        for (int i : {mid, hi}) {
          simplex[i] = simplex[lo] + 0.5 * (simplex[i] - simplex[lo]);
          values[i] = cost(simplex[i](0), simplex[i](1));
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (values[i] < values[best]) best = i;
  result.kappa_k_opt = simplex[best](0);
  result.delta_opt = simplex[best](1);
  result.norm_opt = values[best];
  result.iterations = iterations;

  const double kappa_margin = 1e-3 * (bounds.kappa_k_max - bounds.kappa_k_min);
  const double delta_margin = 1e-3 * (bounds.delta_max - bounds.delta_min);
  result.on_boundary =
      result.kappa_k_opt - bounds.kappa_k_min < kappa_margin ||
      bounds.kappa_k_max - result.kappa_k_opt < kappa_margin ||
      result.delta_opt - bounds.delta_min < delta_margin ||
      bounds.delta_max - result.delta_opt < delta_margin;
  return result;
}

}  // namespace baectl
