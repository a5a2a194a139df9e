#include "baectl/bae_synthesis.hpp"

#include <cmath>
#include <stdexcept>

namespace baectl {

namespace {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

const char* const kParamNames[] = {"f11", "f12", "f14", "f24", "g12", "g22",
                                   "g31", "g32", "n11", "n12", "n14", "n21",
                                   "n22", "n24"};

void validate_spec(const PlantSpec& spec) {
  if (spec.omega_m <= 0.0 || spec.kappa <= 0.0 || spec.gamma <= 0.0)
    throw std::invalid_argument("PlantSpec: rates must be positive");
  if (spec.g < 0.0)
    throw std::invalid_argument("PlantSpec: coupling must be nonnegative");
  if (spec.ports != 1 && spec.ports != 3)
    throw std::invalid_argument("PlantSpec: ports must be 1 or 3");
}

// Normalized residuals of the realizability constraint equations; entries with
// frequency dimension are divided by max(kappa, omega_m) and entries with
// sqrt(frequency) dimension by sqrt(kappa), so thresholds are scale-free.
VectorXd residuals_impl(Scheme scheme, const PlantSpec& plant, const ParamMap& p) {
  const double sk = std::sqrt(plant.kappa);
  const double g = plant.g;
  const double wm = plant.omega_m;
  const double kd = (scheme == Scheme::kCoherent ? 1.5 : 0.5) * plant.kappa;
  const double freq_scale = std::max(plant.kappa, wm);

  auto at = [&p](const char* name) {
    auto it = p.find(name);
    if (it == p.end())
      throw std::invalid_argument(std::string("constraint_residuals: missing parameter ") + name);
    return it->second;
  };
  const double f11 = at("f11"), f12 = at("f12"), f14 = at("f14"), f24 = at("f24");
  const double g12 = at("g12"), g22 = at("g22");
  const double n11 = at("n11"), n12 = at("n12"), n14 = at("n14");
  const double n21 = at("n21"), n22 = at("n22"), n24 = at("n24");
  const double n1 = n11 * n24 - n14 * n21;
  const double n2 = n12 * n24 - n14 * n22;

  VectorXd r(7);
  r(0) = (f12 + g12) / sk;
  r(1) = (f11 - g22) / sk;
  r(2) = n11 * n22 - n12 * n21 + 1.0;
  r(3) = (f12 * n1 - f11 * n2 + f14) / sk;
  if (scheme == Scheme::kCoherent)
    r(4) = (f24 + sk - (g / sk) * n2) / sk;
  else
    r(4) = (f24 - (g / sk) * n2) / sk;
  r(5) = ((kd + sk * f24) * n1 + wm * n2 + sk * f11) / freq_scale;
  r(6) = (wm * n1 - (kd + sk * f24) * n2 - sk * f12) / freq_scale;
  return r;
}

}  // namespace

QuadratureSystem build_optomech_plant(const PlantSpec& spec) {
  validate_spec(spec);
  const double wm = spec.omega_m;
  const double g = spec.g;

  MatrixXd hamiltonian(4, 4);
  hamiltonian << wm, 0, -g, 0,
                 0, wm, 0, 0,
                 -g, 0, 0, 0,
                 0, 0, 0, 0;
  Eigen::VectorXcd coupling(4);
  coupling << 0.0, 0.0, std::sqrt(spec.kappa / 2.0),
      std::complex<double>(0.0, std::sqrt(spec.kappa / 2.0));

  QuadratureSystem plant = build_system(
      hamiltonian, std::vector<Eigen::VectorXcd>(spec.ports, coupling));
  if (spec.include_damping) plant.A(1, 1) -= spec.gamma;

  VectorXd force = VectorXd::Zero(4);
  force(1) = std::sqrt(spec.gamma);
  plant.force = force;
  plant.disturbance = plant.B[0].col(0);   // back-action quadrature injection
  plant.regulated = plant.C[0].row(1);     // measured phase quadrature
  return plant;
}

SolvabilityReport check_solvability(const QuadratureSystem& plant) {
  if (!plant.disturbance || !plant.regulated)
    throw std::invalid_argument("check_solvability: plant lacks disturbance column or regulated row");
  const Subspace input_image = Subspace::image(plant.B.at(0));
  const Subspace output_kernel = Subspace::kernel(plant.C.at(0));
  const Subspace e_image = Subspace::image(*plant.disturbance);
  const Subspace h_kernel = Subspace::kernel(*plant.regulated);

  SolvabilityReport report;
  report.v_sub = minimal_conditioned_invariant(plant.A, output_kernel, e_image);
  report.v_star = maximal_controlled_invariant(plant.A, input_image, h_kernel);
  report.solvable = report.v_star.contains(report.v_sub);
  return report;
}

Eigen::MatrixXd ControllerFamily::state_feedback() const {
  const double sk = std::sqrt(plant.kappa);
  MatrixXd f(2, 4);
  f << param("f11"), param("f12"),
      (scheme == Scheme::kCoherent ? -sk : 0.0), param("f14"),
      plant.g / sk, 0.0, 0.0, param("f24");
  return f;
}

Eigen::MatrixXd ControllerFamily::output_injection() const {
  const double sk = std::sqrt(plant.kappa);
  MatrixXd g(4, 2);
  g << 0.0, param("g12"),
      -plant.g / sk, param("g22"),
      param("g31"), param("g32"),
      0.0, (scheme == Scheme::kCoherent ? sk : 0.0);
  return g;
}

Eigen::MatrixXd ControllerFamily::projection() const {
  MatrixXd n(2, 4);
  n << param("n11"), param("n12"), 0.0, param("n14"),
      param("n21"), param("n22"), 0.0, param("n24");
  return n;
}

double ControllerFamily::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end())
    throw std::runtime_error("ControllerFamily: parameter " + name + " not resolved");
  return it->second;
}

ControllerFamily synthesize_family(const PlantSpec& spec, Scheme scheme) {
  validate_spec(spec);
  const int wanted_ports = scheme == Scheme::kCoherent ? 3 : 1;
  if (spec.ports != wanted_ports)
    throw std::invalid_argument("synthesize_family: scheme and port count disagree");

  const QuadratureSystem plant = build_optomech_plant(spec);
  const SolvabilityReport solvability = check_solvability(plant);
  if (!solvability.solvable)
    throw std::runtime_error("synthesize_family: decoupling problem not solvable");
  const Eigen::Index controller_dim =
      solvability.v_star.dim() - solvability.v_sub.dim();
  if (controller_dim != 2)
    throw std::runtime_error("synthesize_family: unexpected controller dimension");

  ControllerFamily family;
  family.scheme = scheme;
  family.plant = spec;
  family.feedthrough = scheme == Scheme::kCoherent
                           ? Matrix2d(-Matrix2d::Identity())
                           : Matrix2d(Matrix2d::Zero());
  return family;
}

Eigen::VectorXd constraint_residuals(const ControllerFamily& family,
                                     const ParamMap& params) {
  return residuals_impl(family.scheme, family.plant, params);
}

ControllerFamily apply_realizability_constraints(const ControllerFamily& family,
                                                 const ParamMap& assignments) {
  for (const auto& [name, value] : assignments) {
    (void)value;
    bool known = false;
    for (const char* p : kParamNames) known = known || name == p;
    if (!known)
      throw std::invalid_argument("apply_realizability_constraints: unknown parameter " + name);
  }

  ParamMap full = assignments;
  std::vector<std::string> unknowns;
  for (const char* p : kParamNames) {
    if (full.count(p)) continue;
    // g31/g32 never enter the constraints; pin them for determinism.
    if (std::string(p) == "g31" || std::string(p) == "g32") {
      full[p] = 0.0;
      continue;
    }
    unknowns.push_back(p);
    full[p] = 0.0;
  }

  auto residual_at = [&](const VectorXd& x) {
    ParamMap p = full;
    for (std::size_t i = 0; i < unknowns.size(); ++i) p[unknowns[i]] = x(i);
    return residuals_impl(family.scheme, family.plant, p);
  };

  VectorXd x = VectorXd::Zero(static_cast<Eigen::Index>(unknowns.size()));
  VectorXd r = residual_at(x);
  if (!unknowns.empty()) {
    // Damped Gauss-Newton on the normalized residual system.
    double lambda = 1e-3;
    for (int step = 0; step < 200 && r.norm() > 1e-14; ++step) {
      MatrixXd jac(r.size(), x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-7 * std::max(1.0, std::abs(x(i)));
        VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        jac.col(i) = (residual_at(xp) - residual_at(xm)) / (2.0 * h);
      }
      const MatrixXd jtj = jac.transpose() * jac;
      const VectorXd delta =
          (jtj + lambda * MatrixXd::Identity(x.size(), x.size()))
              .ldlt()
              .solve(-jac.transpose() * r);
      const VectorXd x_new = x + delta;
      const VectorXd r_new = residual_at(x_new);
      if (r_new.norm() < r.norm()) {
        x = x_new;
        r = r_new;
        lambda = std::max(lambda * 0.3, 1e-12);
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) break;
      }
    }
  }

  ControllerFamily resolved = family;
  resolved.params = full;
  for (std::size_t i = 0; i < unknowns.size(); ++i) resolved.params[unknowns[i]] = x(i);
  resolved.residuals = residual_at(x);
  resolved.realizable = resolved.residuals.lpNorm<Eigen::Infinity>() < 1e-10;
  if (resolved.residuals.lpNorm<Eigen::Infinity>() > 1e-8)
    throw std::runtime_error(
        "apply_realizability_constraints: assignment inconsistent with the constraint equations");

  // Observed manifold dimension at the solution: Jacobian over every
  // constrained parameter (the two decoupled injection gains stay gauge).
  {
    std::vector<std::string> constrained;
    for (const char* p : kParamNames)
      if (std::string(p) != "g31" && std::string(p) != "g32") constrained.push_back(p);
    MatrixXd jac(7, static_cast<Eigen::Index>(constrained.size()));
    for (std::size_t i = 0; i < constrained.size(); ++i) {
      ParamMap plus = resolved.params, minus = resolved.params;
      const double h = 1e-6 * std::max(1.0, std::abs(resolved.params[constrained[i]]));
      plus[constrained[i]] += h;
      minus[constrained[i]] -= h;
      jac.col(static_cast<Eigen::Index>(i)) =
          (residuals_impl(family.scheme, family.plant, plus) -
           residuals_impl(family.scheme, family.plant, minus)) /
          (2.0 * h);
    }
    Eigen::JacobiSVD<MatrixXd> svd(jac);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-6 * sv(0)) ++rank;
    resolved.manifold_dim =
        static_cast<int>(constrained.size()) - static_cast<int>(rank) + 2;
  }
  return resolved;
}

ParamMap passive_assignment(const PlantSpec& spec, double n11, double n12) {
  const double norm = std::hypot(n11, n12);
  if (norm == 0.0)
    throw std::invalid_argument("passive_assignment: (n11, n12) must be nonzero");
  return ParamMap{{"f12", spec.g / std::sqrt(spec.kappa)},
                  {"f11", 0.0},
                  {"n11", n11 / norm},
                  {"n12", n12 / norm},
                  {"n21", n12 / norm},
                  {"n22", -n11 / norm}};
}

ParamMap active_assignment() {
  return ParamMap{{"f11", 0.0}, {"f12", 0.0}, {"f14", 0.0},
                  {"n11", 1.0}, {"n12", 0.0}, {"n21", 0.0}, {"n22", -1.0}};
}

std::variant<CoherentController, DirectController> controller_matrices(
    const ControllerFamily& family) {
  if (family.params.empty() || !family.realizable)
    throw std::runtime_error("controller_matrices: constraints not satisfied");

  PlantSpec spec = family.plant;
  spec.ports = family.scheme == Scheme::kCoherent ? 3 : 1;
  spec.include_damping = false;
  const QuadratureSystem plant = build_optomech_plant(spec);
  const MatrixXd& a = plant.A;
  const MatrixXd b = plant.B[0];
  const MatrixXd c = plant.C[0];
  const Matrix2d j2 = symplectic2();

  const MatrixXd f = family.state_feedback();
  const MatrixXd g = family.output_injection();
  const MatrixXd n = family.projection();

  // Right inverse restricted to v_star; rows of N must span a complement of
  // v_sub inside v_star.
  const SolvabilityReport solvability = check_solvability(plant);
  {
    Eigen::JacobiSVD<MatrixXd> svd(n);
    if (svd.singularValues()(1) <= kDefaultRankTol * svd.singularValues()(0))
      throw std::runtime_error("controller_matrices: projection not full row rank");
  }
  if (!intersect(Subspace::kernel(n), solvability.v_star)
           .same_space_as(solvability.v_sub))
    throw std::runtime_error("controller_matrices: kernel of projection is not v_sub");
  const MatrixXd basis2 = solvability.v_star.basis();
  const MatrixXd n_restricted = n * basis2;
  const MatrixXd n_right_inverse =
      basis2 * n_restricted.completeOrthogonalDecomposition().pseudoInverse();
  if ((n * n_right_inverse - Matrix2d::Identity()).norm() > 1e-9)
    throw std::runtime_error("controller_matrices: right inverse failed");

  const MatrixXd f0 = f - family.feedthrough * c;
  const MatrixXd g0 = g - b * family.feedthrough;

  if (family.scheme == Scheme::kCoherent) {
    CoherentController ctrl;
    ctrl.A_K = n * (a + b * f0 + g * c + g0 * f0) * n_right_inverse;
    ctrl.B_K = -n * g0 * j2;
    ctrl.C_K = j2 * f0 * n_right_inverse;

    QuadratureSystem as_system;
    as_system.n_modes = 1;
    as_system.A = ctrl.A_K;
    as_system.B = {ctrl.B_K, ctrl.B_K};
    as_system.C = {ctrl.C_K, ctrl.C_K};
    if (!check_physical_realizability(as_system).pass)
      throw std::runtime_error("controller_matrices: synthesized controller not realizable");
    return ctrl;
  }

  DirectController ctrl;
  ctrl.R_K = -j2 * n * (a + b * f + g * c) * n_right_inverse;
  ctrl.R1 = -symplectic(2) * b * f * n_right_inverse;
  ctrl.R2 = j2 * n * g * c;
  const double scale = std::max(1.0, ctrl.R2.norm());
  if ((ctrl.R_K - ctrl.R_K.transpose()).norm() > 1e-10 * std::max(1.0, ctrl.R_K.norm()) ||
      (ctrl.R1.transpose() - ctrl.R2).norm() > 1e-10 * scale)
    throw std::runtime_error("controller_matrices: direct controller violates realizability");
  return ctrl;
}

CoherentController cavity_controller(double kappa_k, double delta) {
  if (kappa_k <= 0.0)
    throw std::invalid_argument("cavity_controller: decay rate must be positive");
  Eigen::VectorXcd coupling(2);
  coupling << std::sqrt(kappa_k / 2.0),
      std::complex<double>(0.0, std::sqrt(kappa_k / 2.0));
  const QuadratureSystem sys = build_system(
      delta * Matrix2d::Identity(), {coupling, coupling});
  CoherentController ctrl;
  ctrl.A_K = sys.A;
  ctrl.B_K = sys.B[0];
  ctrl.C_K = sys.C[0];
  return ctrl;
}

Eigen::Matrix2d phase_shifter(double theta) {
  Matrix2d s;
  s << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return s;
}

ClosedLoop assemble_coherent_loop(const QuadratureSystem& plant3,
                                  const CoherentController& ctrl,
                                  const std::vector<Eigen::Matrix2d>& s,
                                  const std::vector<Eigen::Matrix2d>& t) {
  if (plant3.channels() != 3)
    throw std::invalid_argument("assemble_coherent_loop: plant must have 3 channels");
  if (s.size() != 2 || t.size() != 2)
    throw std::invalid_argument("assemble_coherent_loop: need 2 scattering matrices per side");
  for (const auto& m : {s[0], s[1], t[0], t[1]}) {
    if ((m.transpose() * m - Matrix2d::Identity()).norm() > 1e-12)
      throw std::invalid_argument("assemble_coherent_loop: scattering matrix not orthogonal");
  }
  for (int j = 1; j < 3; ++j) {
    if ((plant3.B[j] - plant3.B[0]).norm() > 1e-12 * std::max(1.0, plant3.B[0].norm()))
      throw std::invalid_argument("assemble_coherent_loop: ports must couple identically");
  }

  const MatrixXd& a = plant3.A;
  const MatrixXd b = plant3.B[0];
  const MatrixXd c = plant3.C[0];
  const Matrix2d id = Matrix2d::Identity();
  const Matrix2d s2t1 = s[1] * t[0];
  const Matrix2d loop_gain = t[0] * s[0] + t[1] * s[1] * (t[0] * s[0] + id);
  const Matrix2d feedthrough = t[1] * s[1] * t[0] * s[0];

  ClosedLoop loop;
  loop.plant_dim = plant3.state_dim();
  const Eigen::Index n = loop.plant_dim;
  loop.A.setZero(n + 2, n + 2);
  loop.A.topLeftCorner(n, n) = a + b * loop_gain * c;
  loop.A.topRightCorner(n, 2) = b * (t[0] + t[1] * (id + s2t1)) * ctrl.C_K;
  loop.A.bottomLeftCorner(2, n) = ctrl.B_K * ((id + s2t1) * s[0] + s[1]) * c;
  loop.A.bottomRightCorner(2, 2) = ctrl.A_K + ctrl.B_K * s2t1 * ctrl.C_K;

  loop.B.setZero(n + 2, 2);
  loop.B.topRows(n) = b * (id + t[0] * s[0] + feedthrough);
  loop.B.bottomRows(2) = ctrl.B_K * (id + s2t1) * s[0];

  loop.C.setZero(2, n + 2);
  loop.C.leftCols(n) = (feedthrough + t[1] * s[1] + id) * c;
  loop.C.rightCols(2) = t[1] * (s2t1 + id) * ctrl.C_K;

  loop.D = feedthrough;

  loop.force = VectorXd::Zero(n + 2);
  if (plant3.force) loop.force.head(n) = *plant3.force;
  loop.disturbance = loop.B.col(0);
  loop.regulated = loop.C.row(1);

  const bool feedback_condition = (s2t1 + id).norm() < 1e-9;
  const bool feedthrough_condition =
      (loop.D - id).norm() < 1e-9 || (loop.D + id).norm() < 1e-9;
  loop.conforming = feedback_condition && feedthrough_condition;
  return loop;
}

ClosedLoop assemble_coherent_loop(const QuadratureSystem& plant3,
                                  const CoherentController& ctrl) {
  const Matrix2d quarter = phase_shifter(M_PI / 2.0);
  return assemble_coherent_loop(plant3, ctrl, {quarter, quarter},
                                {quarter, quarter});
}

ClosedLoop assemble_direct_loop(const QuadratureSystem& plant1,
                                const DirectController& ctrl) {
  if (plant1.channels() != 1)
    throw std::invalid_argument("assemble_direct_loop: plant must have a single channel");
  const double scale = std::max(1.0, ctrl.R2.norm());
  if ((ctrl.R_K - ctrl.R_K.transpose()).norm() > 1e-9 * std::max(1.0, ctrl.R_K.norm()) ||
      (ctrl.R1.transpose() - ctrl.R2).norm() > 1e-9 * scale)
    throw std::invalid_argument("assemble_direct_loop: interaction blocks violate realizability");

  const Eigen::Index n = plant1.state_dim();
  ClosedLoop loop;
  loop.plant_dim = n;
  loop.A.setZero(n + 2, n + 2);
  loop.A.topLeftCorner(n, n) = plant1.A;
  loop.A.topRightCorner(n, 2) = symplectic(plant1.n_modes) * ctrl.R1;
  loop.A.bottomLeftCorner(2, n) = symplectic2() * ctrl.R2;
  loop.A.bottomRightCorner(2, 2) = symplectic2() * ctrl.R_K;

  loop.B.setZero(n + 2, 2);
  loop.B.topRows(n) = plant1.B[0];
  loop.C.setZero(2, n + 2);
  loop.C.leftCols(n) = plant1.C[0];
  loop.D = Matrix2d::Identity();

  loop.force = VectorXd::Zero(n + 2);
  if (plant1.force) loop.force.head(n) = *plant1.force;
  loop.disturbance = loop.B.col(0);
  loop.regulated = loop.C.row(1);
  loop.conforming = true;
  return loop;
}

}  // namespace baectl
