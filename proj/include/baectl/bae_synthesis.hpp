#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "baectl/quantum_system.hpp"
#include "baectl/subspace.hpp"

namespace baectl {

/// Physical parameters of the opto-mechanical sensor, all rates in rad/s.
struct PlantSpec {
  double omega_m = 0.0;  // mechanical resonance
  double kappa = 0.0;    // per-port cavity decay
  double gamma = 0.0;    // force coupling / mechanical damping
  double g = 0.0;        // radiation-pressure coupling
  int ports = 3;         // 1 (direct scheme) or 3 (coherent feedback)
  bool include_damping = false;  // put -gamma in the momentum diagonal
};

/// Oscillator + cavity plant.  The single-port variant carries the sensing
/// force column; the 3-port variant additionally has every port coupled
/// identically.  Both expose the back-action injection column E and the
/// measured-quadrature row H.
QuadratureSystem build_optomech_plant(const PlantSpec& spec);

struct SolvabilityReport {
  Subspace v_sub;   // minimal conditioned invariant containing Image E
  Subspace v_star;  // maximal controlled invariant inside Kernel H
  bool solvable = false;
};

/// Disturbance-decoupling solvability test: solvable iff v_sub is contained
/// in v_star.  The plant must carry its disturbance column and regulated row.
SolvabilityReport check_solvability(const QuadratureSystem& plant);

enum class Scheme { kCoherent, kDirect };

using ParamMap = std::map<std::string, double>;

/// The parametrized set of decoupling controllers for the opto-mechanical
/// plant.  The matrices F (state feedback), G (output injection) and N
/// (projection with kernel v_sub) are filled from 14 named scalar parameters;
/// the fixed entries are pinned by the friend/kernel/image conditions.
/// apply_realizability_constraints() resolves the parameters against the
/// scheme's quantum-consistency equations.
class ControllerFamily {
 public:
  Scheme scheme = Scheme::kCoherent;
  PlantSpec plant;
  ParamMap params;            // f11 f12 f14 f24 g12 g22 g31 g32 n11..n24
  Eigen::VectorXd residuals;  // constraint residuals after resolution
  bool realizable = false;
  Eigen::Matrix2d feedthrough;  // D_K: -I (coherent) or 0 (direct)

  // Observed dimension of the solution manifold at the resolved point:
  // constrained parameters minus the numerical rank of the constraint
  // Jacobian.  Reported, not asserted; the two decoupled injection gains are
  // counted on top of it.
  int manifold_dim = -1;

  Eigen::MatrixXd state_feedback() const;    // 2 x 4
  Eigen::MatrixXd output_injection() const;  // 4 x 2
  Eigen::MatrixXd projection() const;        // 2 x 4

  double param(const std::string& name) const;
};

/// Builds the parametrized family after verifying solvability.  The
/// controller state dimension is dim(v_star) - dim(v_sub) = 2 (one mode).
ControllerFamily synthesize_family(const PlantSpec& spec, Scheme scheme);

/// Evaluates the scheme's realizability constraint equations.  Residual order:
///   0: f12 + g12
///   1: f11 - g22
///   2: n11 n22 - n12 n21 + 1
///   3: f12 n1 - f11 n2 + f14
///   4: coupling row:  f24 + sqrt(k) - (g/sqrt(k)) n2    (coherent)
///                     f24 - (g/sqrt(k)) n2              (direct)
///   5: (kd + sqrt(k) f24) n1 + omega_m n2 + sqrt(k) f11
///   6: omega_m n1 - (kd + sqrt(k) f24) n2 - sqrt(k) f12
/// with kd = 3 kappa / 2 (coherent) or kappa / 2 (direct),
/// n1 = n11 n24 - n14 n21, n2 = n12 n24 - n14 n22.
Eigen::VectorXd constraint_residuals(const ControllerFamily& family,
                                     const ParamMap& params);

/// Fixes the given parameters and solves the remaining ones with a damped
/// Gauss-Newton iteration seeded at zero.  Throws if the assignment is
/// inconsistent (residual above 1e-8 after convergence).
ControllerFamily apply_realizability_constraints(const ControllerFamily& family,
                                                 const ParamMap& assignments);

/// The passive specialization: f12 = g/sqrt(kappa), f11 = 0, n22 = -n11,
/// n21 = n12, with (n11, n12) on the unit circle fixing the port phase.
ParamMap passive_assignment(const PlantSpec& spec, double n11 = 1.0,
                            double n12 = 0.0);

/// The active direct-interaction specialization (beam-splitter plus
/// parametric coupling of equal weight): f11 = f12 = f14 = 0.
ParamMap active_assignment();

struct CoherentController {
  Eigen::Matrix2d A_K, B_K, C_K;
};

struct DirectController {
  Eigen::Matrix2d R_K;   // controller self-Hamiltonian
  Eigen::MatrixXd R1;    // 4 x 2 plant-side interaction block
  Eigen::MatrixXd R2;    // 2 x 4 controller-side block, R1^T
};

/// Resolves the family into concrete controller matrices.  The projection's
/// right inverse is the pseudoinverse restricted to v_star, which makes the
/// construction deterministic.
std::variant<CoherentController, DirectController> controller_matrices(
    const ControllerFamily& family);

/// Single-mode cavity with detuning `delta` and decay `kappa_k` per port,
/// coupled through two identical ports; the coherent-feedback workhorse.
CoherentController cavity_controller(double kappa_k, double delta);

/// Quadrature rotation of a phase shifter by theta.
Eigen::Matrix2d phase_shifter(double theta);

struct ClosedLoop {
  Eigen::MatrixXd A, B, C, D;
  Eigen::VectorXd force;           // force injection column
  Eigen::VectorXd disturbance;     // back-action injection column
  Eigen::RowVectorXd regulated;    // measured output row
  Eigen::Index plant_dim = 0;
  bool conforming = false;  // scattering collapsed to the decoupling form
};

/// General 3-port coherent feedback interconnection through scattering
/// matrices s1, s2 (plant-to-controller) and t1, t2 (controller-to-plant).
/// The loop conforms to the disturbance-decoupling structure only when
/// s2 * t1 = -I and the total feedthrough is +/- I; the flag records this.
ClosedLoop assemble_coherent_loop(const QuadratureSystem& plant3,
                                  const CoherentController& ctrl,
                                  const std::vector<Eigen::Matrix2d>& s,
                                  const std::vector<Eigen::Matrix2d>& t);

/// Coherent loop with all four scatterers set to the pi/2 phase shifter.
ClosedLoop assemble_coherent_loop(const QuadratureSystem& plant3,
                                  const CoherentController& ctrl);

/// Hamiltonian (direct) interconnection of the single-port plant.
ClosedLoop assemble_direct_loop(const QuadratureSystem& plant1,
                                const DirectController& ctrl);

}  // namespace baectl
