#include "baectl/subspace.hpp"

#include <algorithm>
#include <stdexcept>

namespace baectl {

namespace {

// Rank decision: singular values are compared against tol times the larger of
// the leading singular value and an external scale.  The scale matters when
// the matrix is zero up to roundoff (e.g. a projected operator): without it
// the leading noise singular value would count as rank.
Eigen::Index rank_from_singular_values(const Eigen::VectorXd& sv, double tol,
                                       double scale = 0.0) {
  if (sv.size() == 0) return 0;
  const double reference = std::max(sv(0), scale);
  if (reference == 0.0) return 0;
  const double cutoff = tol * reference;
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) >= cutoff && sv(r) > 0.0) ++r;
  return r;
}

}  // namespace

Subspace Subspace::zero(Eigen::Index ambient_dim, double tol) {
  if (ambient_dim < 1) throw std::invalid_argument("Subspace: empty ambient space");
  return Subspace(Eigen::MatrixXd(ambient_dim, 0), tol);
}

Subspace Subspace::full(Eigen::Index ambient_dim, double tol) {
  if (ambient_dim < 1) throw std::invalid_argument("Subspace: empty ambient space");
  return Subspace(Eigen::MatrixXd::Identity(ambient_dim, ambient_dim), tol);
}

Subspace Subspace::image(const Eigen::MatrixXd& m, double tol) {
  return image_scaled(m, tol, 0.0);
}

Subspace Subspace::kernel(const Eigen::MatrixXd& m, double tol) {
  return kernel_scaled(m, tol, 0.0);
}

Subspace Subspace::image_scaled(const Eigen::MatrixXd& m, double tol, double scale) {
  if (m.rows() < 1) throw std::invalid_argument("Subspace::image: empty ambient space");
  if (m.cols() == 0) return zero(m.rows(), tol);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const Eigen::Index r = rank_from_singular_values(svd.singularValues(), tol, scale);
  return Subspace(svd.matrixU().leftCols(r), tol);
}

Subspace Subspace::kernel_scaled(const Eigen::MatrixXd& m, double tol, double scale) {
  if (m.cols() < 1) throw std::invalid_argument("Subspace::kernel: empty ambient space");
  if (m.rows() == 0) return full(m.cols(), tol);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const Eigen::Index r = rank_from_singular_values(svd.singularValues(), tol, scale);
  return Subspace(svd.matrixV().rightCols(m.cols() - r), tol);
}

Subspace Subspace::orthogonal_complement() const {
  return kernel(basis_.transpose(), tol_);
}

bool Subspace::contains_vector(const Eigen::VectorXd& x) const {
  if (x.size() != ambient_dim())
    throw std::invalid_argument("Subspace::contains_vector: dimension mismatch");
  const double nx = x.norm();
  if (nx == 0.0) return true;
  const Eigen::VectorXd residual = x - basis_ * (basis_.transpose() * x);
  return residual.norm() <= tol_ * nx;
}

bool Subspace::contains(const Subspace& other) const {
  if (other.ambient_dim() != ambient_dim())
    throw std::invalid_argument("Subspace::contains: dimension mismatch");
  const double tol = std::max(tol_, other.tol_);
  for (Eigen::Index j = 0; j < other.dim(); ++j) {
    const Eigen::VectorXd x = other.basis_.col(j);
    const Eigen::VectorXd residual = x - basis_ * (basis_.transpose() * x);
    if (residual.norm() > tol) return false;  // basis columns are unit vectors
  }
  return true;
}

bool Subspace::same_space_as(const Subspace& other) const {
  return dim() == other.dim() && contains(other) && other.contains(*this);
}

Subspace sum(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    throw std::invalid_argument("sum: dimension mismatch");
  const double tol = std::max(v.tol(), w.tol());
  Eigen::MatrixXd stacked(v.ambient_dim(), v.dim() + w.dim());
  stacked << v.basis(), w.basis();
  return Subspace::image_scaled(stacked, tol, 1.0);  // basis columns are unit
}

Subspace intersect(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    throw std::invalid_argument("intersect: dimension mismatch");
  const double tol = std::max(v.tol(), w.tol());
  const Eigen::Index n = v.ambient_dim();
  if (v.dim() == 0 || w.dim() == 0) return Subspace::zero(n, tol);
  // x lies in both spaces iff it is annihilated by both complementary projectors.
  Eigen::MatrixXd stacked(2 * n, n);
  stacked.topRows(n) = Eigen::MatrixXd::Identity(n, n) - v.projector();
  stacked.bottomRows(n) = Eigen::MatrixXd::Identity(n, n) - w.projector();
  return Subspace::kernel_scaled(stacked, tol, 1.0);  // projectors have unit scale
}

Subspace apply(const Eigen::MatrixXd& a, const Subspace& v) {
  if (a.cols() != v.ambient_dim())
    throw std::invalid_argument("apply: dimension mismatch");
  if (v.dim() == 0) return Subspace::zero(a.rows(), v.tol());
  return Subspace::image_scaled(a * v.basis(), v.tol(), a.norm());
}

Subspace preimage(const Eigen::MatrixXd& a, const Subspace& v) {
  if (a.rows() != v.ambient_dim())
    throw std::invalid_argument("preimage: dimension mismatch");
  const Eigen::Index n = v.ambient_dim();
  const Eigen::MatrixXd off_v = (Eigen::MatrixXd::Identity(n, n) - v.projector()) * a;
  return Subspace::kernel_scaled(off_v, v.tol(), a.norm());
}

bool is_ab_invariant(const Eigen::MatrixXd& a, const Subspace& input_image,
                     const Subspace& v) {
  return sum(v, input_image).contains(apply(a, v));
}

bool is_ca_invariant(const Eigen::MatrixXd& a, const Subspace& output_kernel,
                     const Subspace& v) {
  return v.contains(apply(a, intersect(v, output_kernel)));
}

Subspace maximal_controlled_invariant(const Eigen::MatrixXd& a,
                                      const Subspace& input_image,
                                      const Subspace& target) {
  const Eigen::Index n = target.ambient_dim();
  Subspace v = target;
  for (Eigen::Index iter = 0; iter <= n; ++iter) {
    Subspace next = intersect(target, preimage(a, sum(v, input_image)));
    if (next.dim() == v.dim()) return next;
    if (next.dim() > v.dim())
      throw std::logic_error("maximal_controlled_invariant: dimension increased");
    v = next;
  }
  throw std::logic_error("maximal_controlled_invariant: no fixed point within n steps");
}

Subspace minimal_conditioned_invariant(const Eigen::MatrixXd& a,
                                       const Subspace& output_kernel,
                                       const Subspace& seed) {
  const Eigen::Index n = seed.ambient_dim();
  Subspace v = seed;
  for (Eigen::Index iter = 0; iter <= n; ++iter) {
    Subspace next = sum(seed, apply(a, intersect(v, output_kernel)));
    if (next.dim() == v.dim()) return next;
    if (next.dim() < v.dim())
      throw std::logic_error("minimal_conditioned_invariant: dimension decreased");
    v = next;
  }
  throw std::logic_error("minimal_conditioned_invariant: no fixed point within n steps");
}

Eigen::MatrixXd state_feedback_friend(const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b,
                                      const Subspace& v) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (a.cols() != n || b.rows() != n || v.ambient_dim() != n)
    throw std::invalid_argument("state_feedback_friend: dimension mismatch");
  if (v.dim() == 0) return Eigen::MatrixXd::Zero(m, n);
  if (!is_ab_invariant(a, Subspace::image(b, v.tol()), v))
    throw std::runtime_error("state_feedback_friend: subspace is not (A,B)-invariant");

  // Decompose A v_j over [basis(v), B] and keep the input component.
  Eigen::MatrixXd decomposition(n, v.dim() + m);
  decomposition << v.basis(), b;
  Eigen::MatrixXd inputs(m, v.dim());
  for (Eigen::Index j = 0; j < v.dim(); ++j) {
    const Eigen::VectorXd target = a * v.basis().col(j);
    const Eigen::VectorXd coeffs =
        decomposition.colPivHouseholderQr().solve(target);
    const double residual = (decomposition * coeffs - target).norm();
    if (residual > 100.0 * v.tol() * std::max(1.0, target.norm()))
      throw std::runtime_error("state_feedback_friend: decomposition residual too large");
    inputs.col(j) = coeffs.tail(m);
  }
  const Eigen::MatrixXd f = -inputs * v.basis().transpose();

  const Eigen::MatrixXd closed = a + b * f;
  const Eigen::MatrixXd residual =
      (Eigen::MatrixXd::Identity(n, n) - v.projector()) * closed * v.basis();
  if (residual.norm() > 100.0 * v.tol() * std::max(1.0, closed.norm()))
    throw std::runtime_error("state_feedback_friend: invariance verification failed");
  return f;
}

Eigen::MatrixXd output_injection_friend(const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& c,
                                        const Subspace& v) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || c.cols() != n || v.ambient_dim() != n)
    throw std::invalid_argument("output_injection_friend: dimension mismatch");
  if (!is_ca_invariant(a, Subspace::kernel(c, v.tol()), v))
    throw std::runtime_error("output_injection_friend: subspace is not (C,A)-invariant");
  // (A + GC) v in v  iff  (A^T + C^T G^T) keeps the orthogonal complement invariant.
  const Eigen::MatrixXd gt = state_feedback_friend(
      a.transpose(), c.transpose(), v.orthogonal_complement());
  return gt.transpose();
}

}  // namespace baectl
