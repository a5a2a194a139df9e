#pragma once

#include <Eigen/Dense>

namespace baectl {

// Relative singular-value threshold used for all rank decisions.
inline constexpr double kDefaultRankTol = 1e-9;

/// A linear subspace of R^n, stored as a matrix with orthonormal columns.
/// The zero subspace is an n x 0 matrix.  Every instance carries the rank
/// tolerance it was computed with; binary operations propagate the larger
/// of the two operand tolerances.
class Subspace {
 public:
  Subspace() = default;

  static Subspace zero(Eigen::Index ambient_dim, double tol = kDefaultRankTol);
  static Subspace full(Eigen::Index ambient_dim, double tol = kDefaultRankTol);

  /// Column space of m, with rank decided by singular values >= tol * sigma_max.
  static Subspace image(const Eigen::MatrixXd& m, double tol = kDefaultRankTol);

  /// Null space of m, via the right singular vectors of negligible singular values.
  static Subspace kernel(const Eigen::MatrixXd& m, double tol = kDefaultRankTol);

  /// Variants with an absolute scale floor on the rank threshold
  /// (cutoff = tol * max(sigma_max, scale)).  Needed when m may be zero up to
  /// roundoff relative to the operator it was derived from, where the leading
  /// singular value is itself noise.
  static Subspace image_scaled(const Eigen::MatrixXd& m, double tol, double scale);
  static Subspace kernel_scaled(const Eigen::MatrixXd& m, double tol, double scale);

  Eigen::Index ambient_dim() const { return basis_.rows(); }
  Eigen::Index dim() const { return basis_.cols(); }
  double tol() const { return tol_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  /// Orthogonal projector onto the subspace (basis * basis^T).
  Eigen::MatrixXd projector() const { return basis_ * basis_.transpose(); }

  Subspace orthogonal_complement() const;

  /// Membership test: ||x - P x|| <= tol * ||x||.  The zero vector is always a member.
  bool contains_vector(const Eigen::VectorXd& x) const;

  /// True iff every basis column of other is a member of this subspace.
  bool contains(const Subspace& other) const;

  /// Equality as sets, decided by mutual containment.
  bool same_space_as(const Subspace& other) const;

 private:
  Subspace(Eigen::MatrixXd basis, double tol) : basis_(std::move(basis)), tol_(tol) {}

  Eigen::MatrixXd basis_;  // orthonormal columns
  double tol_ = kDefaultRankTol;
};

Subspace sum(const Subspace& v, const Subspace& w);
Subspace intersect(const Subspace& v, const Subspace& w);

/// Image of v under the linear map a (a * v).
Subspace apply(const Eigen::MatrixXd& a, const Subspace& v);

/// Preimage a^{-1}(v) = { x : a x in v }.
Subspace preimage(const Eigen::MatrixXd& a, const Subspace& v);

/// a v  subset of  v + input_image.
bool is_ab_invariant(const Eigen::MatrixXd& a, const Subspace& input_image,
                     const Subspace& v);

/// a (v  intersect  output_kernel)  subset of  v.
bool is_ca_invariant(const Eigen::MatrixXd& a, const Subspace& output_kernel,
                     const Subspace& v);

/// Maximal (A,B)-invariant subspace contained in `target`, by the fixed-point
/// iteration V_0 = target, V_i = target intersect A^{-1}(V_{i-1} + input_image).
/// Dimensions decrease monotonically, so the loop terminates within
/// ambient_dim steps.
Subspace maximal_controlled_invariant(const Eigen::MatrixXd& a,
                                      const Subspace& input_image,
                                      const Subspace& target);

/// Minimal (C,A)-invariant subspace containing `seed`, by the dual iteration
/// V_0 = seed, V_i = seed + A(V_{i-1} intersect output_kernel).
Subspace minimal_conditioned_invariant(const Eigen::MatrixXd& a,
                                       const Subspace& output_kernel,
                                       const Subspace& seed);

/// A friend of an (A,B)-invariant subspace: F with (A + B F) v subset of v.
/// Decomposes A v_j = (v-component) + B u_j column by column via least squares
/// and sets F v_j = -u_j, zero on an orthogonal complement of v.  Throws if v
/// is not (A,B)-invariant or the decomposition residual exceeds the tolerance.
Eigen::MatrixXd state_feedback_friend(const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b,
                                      const Subspace& v);

/// Dual friend: G with (A + G C) v subset of v, built from the transposed
/// problem on the orthogonal complement.
Eigen::MatrixXd output_injection_friend(const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& c,
                                        const Subspace& v);

}  // namespace baectl
