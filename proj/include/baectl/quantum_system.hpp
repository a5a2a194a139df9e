#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace baectl {

/// A linear quantum system of n bosonic modes in quadrature coordinates
/// x = [q_1, p_1, ..., q_n, p_n], with per-channel field couplings.
/// Frequencies are in rad/s throughout; hbar = 1.
struct QuadratureSystem {
  int n_modes = 0;
  Eigen::MatrixXd A;               // 2n x 2n drift
  std::vector<Eigen::MatrixXd> B;  // 2n x 2 input map per field channel
  std::vector<Eigen::MatrixXd> C;  // 2 x 2n output map per field channel

  std::optional<Eigen::VectorXd> force;        // column coupling an external force
  std::optional<Eigen::VectorXd> disturbance;  // column injecting the back-action quadrature
  std::optional<Eigen::RowVectorXd> regulated; // row picking the measured output quadrature

  int channels() const { return static_cast<int>(B.size()); }
  Eigen::Index state_dim() const { return A.rows(); }
};

/// 2x2 commutation form [[0, 1], [-1, 0]].
Eigen::Matrix2d symplectic2();

/// Block-diagonal 2n x 2n commutation form diag(J, ..., J).
Eigen::MatrixXd symplectic(int n_modes);

/// Permutation sending [z1, z2, ..., z_{2n}] to [z1, z3, ..., z2, z4, ...]
/// (all q's first, then all p's).  Orthogonal.
Eigen::MatrixXd mode_permutation(int n_modes);

/// Builds the open system generated by the quadratic Hamiltonian x^T R x / 2
/// and coupling operators L_j = c_j^T x:
///   C_j = sqrt(2) [Re(c_j), Im(c_j)]^T,
///   B_j = J_n C_j^T J,
///   A   = J_n (R + sum_j C_j^T J C_j / 2).
/// The result satisfies the physical realizability identities by construction.
QuadratureSystem build_system(const Eigen::MatrixXd& hamiltonian,
                              const std::vector<Eigen::VectorXcd>& couplings);

struct RealizabilityReport {
  double residual_dynamics = 0.0;  // || A J_n + J_n A^T + sum_j B_j J B_j^T ||
  double residual_coupling = 0.0;  // max_j || B_j - J_n C_j^T J ||
  bool pass = false;
};

RealizabilityReport check_physical_realizability(const QuadratureSystem& sys,
                                                 double tol = 1e-9);

/// The same dynamics written for [a; a*] with creation/annihilation blocks;
/// the full matrices are [[X_minus, X_plus], [conj(X_plus), conj(X_minus)]].
struct AnnihilationSystem {
  Eigen::MatrixXcd a_minus, a_plus;
  Eigen::MatrixXcd b_minus, b_plus;
  Eigen::MatrixXcd c_minus, c_plus;
  Eigen::MatrixXcd d_minus, d_plus;
  int n_modes = 0;
  int channels = 0;
};

AnnihilationSystem to_annihilation(const QuadratureSystem& sys);
QuadratureSystem from_annihilation(const AnnihilationSystem& ann);

/// True iff the system involves annihilation operators only:
/// J_n A J_n = -A and J_n B J_m = -B (channels stacked).
/// Requires a physically realizable system.
bool is_passive(const QuadratureSystem& sys, double tol = 1e-9);

/// Passivity of a direct-interaction controller given by Hamiltonian blocks:
/// requires R_K = R_K^T and R1^T = R2, then checks
/// J_k R_K J_k = -R_K and J_k R2 J_n = -R2.
bool is_passive_direct(const Eigen::MatrixXd& r_controller,
                       const Eigen::MatrixXd& r_plant_side,
                       const Eigen::MatrixXd& r_controller_side,
                       double tol = 1e-9);

void to_json(nlohmann::json& j, const QuadratureSystem& sys);
void from_json(const nlohmann::json& j, QuadratureSystem& sys);

}  // namespace baectl
