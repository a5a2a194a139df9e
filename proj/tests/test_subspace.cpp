#include <doctest.h>

#include <cmath>
#include <random>

#include "baectl/subspace.hpp"

using baectl::Subspace;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

constexpr double kOmegaM = 0.5;
constexpr double kKappa = 1.0;
constexpr double kG = 0.3;

// 3-port plant drift and per-channel coupling blocks.
MatrixXd three_port_a() {
  MatrixXd a(4, 4);
  a << 0, kOmegaM, 0, 0,
      -kOmegaM, 0, kG, 0,
      0, 0, -1.5 * kKappa, 0,
      kG, 0, 0, -1.5 * kKappa;
  return a;
}

MatrixXd coupling_c() {
  MatrixXd c(2, 4);
  c << 0, 0, std::sqrt(kKappa), 0,
      0, 0, 0, std::sqrt(kKappa);
  return c;
}

MatrixXd coupling_b() { return -coupling_c().transpose(); }

VectorXd disturbance_e() {
  VectorXd e = VectorXd::Zero(4);
  e(2) = -std::sqrt(kKappa);
  return e;
}

RowVectorXd regulated_h() {
  RowVectorXd h = RowVectorXd::Zero(4);
  h(3) = std::sqrt(kKappa);
  return h;
}

MatrixXd random_matrix(std::mt19937& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("image: rank-one disturbance column spans e3") {
  const Subspace e = Subspace::image(disturbance_e());
  CHECK(e.dim() == 1);
  VectorXd e3 = VectorXd::Zero(4);
  e3(2) = 1.0;
  CHECK(e.contains_vector(e3));
}

TEST_CASE("image: zero matrix and identity") {
  CHECK(Subspace::image(MatrixXd::Zero(4, 3)).dim() == 0);
  CHECK(Subspace::image(MatrixXd::Identity(4, 4)).dim() == 4);
  CHECK_THROWS_AS(Subspace::image(MatrixXd(0, 2)), std::invalid_argument);
}

TEST_CASE("kernel: measured row, identity, zero") {
  const Subspace h = Subspace::kernel(regulated_h());
  CHECK(h.dim() == 3);
  for (int i = 0; i < 3; ++i) {
    VectorXd basis_vec = VectorXd::Zero(4);
    basis_vec(i) = 1.0;
    CHECK(h.contains_vector(basis_vec));
  }
  CHECK(Subspace::kernel(MatrixXd::Identity(4, 4)).dim() == 0);
  CHECK(Subspace::kernel(MatrixXd::Zero(2, 4)).dim() == 4);
}

TEST_CASE("disturbance image misses the output kernel, ports span the rest") {
  const Subspace e = Subspace::image(disturbance_e());
  const Subspace c_ker = Subspace::kernel(coupling_c());
  CHECK(intersect(e, c_ker).dim() == 0);

  const Subspace h_ker = Subspace::kernel(regulated_h());
  const Subspace b_img = Subspace::image(coupling_b());
  CHECK(sum(h_ker, b_img).dim() == 4);
}

TEST_CASE("preimage under the identity is the subspace itself") {
  std::mt19937 rng(11);
  const Subspace v = Subspace::image(random_matrix(rng, 5, 2));
  CHECK(preimage(MatrixXd::Identity(5, 5), v).same_space_as(v));
}

TEST_CASE("containment") {
  const Subspace h_ker = Subspace::kernel(regulated_h());
  const Subspace e = Subspace::image(disturbance_e());
  CHECK(h_ker.contains(e));
  CHECK(h_ker.contains(h_ker));
  CHECK_FALSE(Subspace::zero(4).contains(Subspace::full(4)));
  CHECK(Subspace::full(4).contains(Subspace::zero(4)));
}

TEST_CASE("invariance predicates on the 3-port plant") {
  const MatrixXd a = three_port_a();
  const Subspace b_img = Subspace::image(coupling_b());
  const Subspace c_ker = Subspace::kernel(coupling_c());
  CHECK(baectl::is_ab_invariant(a, b_img, Subspace::kernel(regulated_h())));
  CHECK(baectl::is_ca_invariant(a, c_ker, Subspace::image(disturbance_e())));
}

TEST_CASE("an A-invariant subspace is (A,B)-invariant for every B") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 5;
    // Build A with an invariant subspace by block-triangular conjugation.
    const Eigen::Index r = 1 + trial % n;
    MatrixXd upper = random_matrix(rng, n, n);
    upper.bottomLeftCorner(n - r, r).setZero();
    const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(random_matrix(rng, n, n))
                           .householderQ();
    const MatrixXd a = q * upper * q.transpose();
    const Subspace v = Subspace::image(q.leftCols(r));
    REQUIRE(v.contains(apply(a, v)));
    const Subspace b_img = Subspace::image(random_matrix(rng, n, 2));
    CHECK(baectl::is_ab_invariant(a, b_img, v));
  }
}

TEST_CASE("maximal controlled invariant subspace of the 3-port plant is Ker H") {
  const MatrixXd a = three_port_a();
  const Subspace h_ker = Subspace::kernel(regulated_h());
  const Subspace v_star =
      baectl::maximal_controlled_invariant(a, Subspace::image(coupling_b()), h_ker);
  CHECK(v_star.dim() == 3);
  CHECK(v_star.same_space_as(h_ker));
}

TEST_CASE("full-space target is its own fixed point") {
  std::mt19937 rng(31);
  const MatrixXd a = random_matrix(rng, 5, 5);
  const Subspace v = baectl::maximal_controlled_invariant(
      a, Subspace::image(random_matrix(rng, 5, 2)), Subspace::full(5));
  CHECK(v.dim() == 5);
}

TEST_CASE("minimal conditioned invariant subspace of the 3-port plant is Image E") {
  const MatrixXd a = three_port_a();
  const Subspace e = Subspace::image(disturbance_e());
  const Subspace v_sub =
      baectl::minimal_conditioned_invariant(a, Subspace::kernel(coupling_c()), e);
  CHECK(v_sub.dim() == 1);
  CHECK(v_sub.same_space_as(e));
}

TEST_CASE("minimal conditioned invariant of the zero seed is zero") {
  std::mt19937 rng(41);
  const MatrixXd a = random_matrix(rng, 4, 4);
  const Subspace v = baectl::minimal_conditioned_invariant(
      a, Subspace::kernel(random_matrix(rng, 2, 4)), Subspace::zero(4));
  CHECK(v.dim() == 0);
}

TEST_CASE("invariant-subspace algorithms: randomized definition checks") {
  std::mt19937 rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 9;  // ambient dims 2..10
    const MatrixXd a = random_matrix(rng, n, n);
    const MatrixXd h = random_matrix(rng, 1 + trial % 2, n);
    const MatrixXd c = random_matrix(rng, 1 + trial % 2, n);
    // Half the trials park the input inside Ker H and the seed inside Ker C,
    // otherwise the fixed point is reached in one step.
    MatrixXd b = random_matrix(rng, n, 1 + trial % 2);
    MatrixXd e = random_matrix(rng, n, 1);
    if (trial % 2 == 0) {
      const Subspace h_ker0 = Subspace::kernel(h);
      const Subspace c_ker0 = Subspace::kernel(c);
      if (h_ker0.dim() > 0) b = h_ker0.basis() * random_matrix(rng, h_ker0.dim(), b.cols());
      if (c_ker0.dim() > 0) e = c_ker0.basis() * random_matrix(rng, c_ker0.dim(), 1);
    }

    const Subspace b_img = Subspace::image(b);
    const Subspace h_ker = Subspace::kernel(h);
    const Subspace v_star = baectl::maximal_controlled_invariant(a, b_img, h_ker);
    CHECK(baectl::is_ab_invariant(a, b_img, v_star));
    CHECK(h_ker.contains(v_star));

    const Subspace c_ker = Subspace::kernel(c);
    const Subspace e_img = Subspace::image(e);
    const Subspace v_sub = baectl::minimal_conditioned_invariant(a, c_ker, e_img);
    CHECK(baectl::is_ca_invariant(a, c_ker, v_sub));
    CHECK(v_sub.contains(e_img));
  }
}

TEST_CASE("maximality: extending the fixed point inside the target breaks invariance") {
  std::mt19937 rng(61);
  int tested = 0;
  for (int trial = 0; trial < 60 && tested < 10; ++trial) {
    const MatrixXd a = random_matrix(rng, 6, 6);
    const MatrixXd h = random_matrix(rng, 1, 6);
    const Subspace h_ker = Subspace::kernel(h);
    // Input direction inside the target, so the fixed point is proper.
    const Subspace b_img =
        Subspace::image(h_ker.basis() * random_matrix(rng, h_ker.dim(), 1));
    const Subspace v_star = baectl::maximal_controlled_invariant(a, b_img, h_ker);
    if (v_star.dim() == h_ker.dim()) continue;  // nothing left to add

    // Take a target vector outside the fixed point.
    VectorXd extra = VectorXd::Zero(6);
    for (Eigen::Index j = 0; j < h_ker.dim(); ++j) {
      const VectorXd candidate =
          h_ker.basis().col(j) -
          v_star.projector() * h_ker.basis().col(j);
      if (candidate.norm() > 1e-6) {
        extra = candidate.normalized();
        break;
      }
    }
    REQUIRE(extra.norm() > 0.5);
    MatrixXd enlarged(6, v_star.dim() + 1);
    enlarged << v_star.basis(), extra;
    CHECK_FALSE(baectl::is_ab_invariant(a, b_img, Subspace::image(enlarged)));
    ++tested;
  }
  CHECK(tested >= 10);
}

TEST_CASE("duality between the two invariant-subspace algorithms") {
  std::mt19937 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const MatrixXd a = random_matrix(rng, n, n);
    const MatrixXd c = random_matrix(rng, 1 + trial % 2, n);
    const MatrixXd e = random_matrix(rng, n, 1 + trial % 2);

    const Subspace direct = baectl::minimal_conditioned_invariant(
        a, Subspace::kernel(c), Subspace::image(e));
    const Subspace dual = baectl::maximal_controlled_invariant(
        a.transpose(), Subspace::image(c.transpose()),
        Subspace::image(e).orthogonal_complement());
    CHECK(direct.same_space_as(dual.orthogonal_complement()));
  }
}

TEST_CASE("state feedback friend holds the subspace invariant") {
  const MatrixXd a = three_port_a();
  const MatrixXd b = coupling_b();
  const Subspace h_ker = Subspace::kernel(regulated_h());
  const MatrixXd f = baectl::state_feedback_friend(a, b, h_ker);

  const MatrixXd closed = a + b * f;
  const MatrixXd residual =
      (MatrixXd::Identity(4, 4) - h_ker.projector()) * closed * h_ker.basis();
  CHECK(residual.norm() < 1e-10);
}

TEST_CASE("friend edge cases") {
  std::mt19937 rng(81);
  const MatrixXd a = random_matrix(rng, 4, 4);
  const MatrixXd b = random_matrix(rng, 4, 2);
  CHECK(baectl::state_feedback_friend(a, b, Subspace::zero(4)).isZero());

  // A-invariant subspace with no input at all: the zero friend works.
  MatrixXd upper = random_matrix(rng, 4, 4);
  upper.bottomLeftCorner(2, 2).setZero();
  const MatrixXd q =
      Eigen::HouseholderQR<MatrixXd>(random_matrix(rng, 4, 4)).householderQ();
  const MatrixXd a_inv = q * upper * q.transpose();
  const Subspace v = Subspace::image(q.leftCols(2));
  const MatrixXd f = baectl::state_feedback_friend(a_inv, MatrixXd::Zero(4, 1), v);
  CHECK(f.isZero(1e-12));

  // Not invariant -> error.
  const Subspace bad = Subspace::image(random_matrix(rng, 4, 1));
  CHECK_THROWS_AS(baectl::state_feedback_friend(MatrixXd::Identity(4, 4) * 0.0 +
                                                    random_matrix(rng, 4, 4),
                                                MatrixXd::Zero(4, 1), bad),
                  std::runtime_error);
}

TEST_CASE("output injection friend holds the subspace invariant") {
  std::mt19937 rng(91);
  const MatrixXd a = three_port_a();
  const MatrixXd c = coupling_c();
  const Subspace e = Subspace::image(disturbance_e());
  const MatrixXd g = baectl::output_injection_friend(a, c, e);
  const MatrixXd closed = a + g * c;
  const MatrixXd residual =
      (MatrixXd::Identity(4, 4) - e.projector()) * closed * e.basis();
  CHECK(residual.norm() < 1e-10);
}

TEST_CASE("randomized friends verify their defining inclusion") {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 3 + trial % 6;
    const MatrixXd a = random_matrix(rng, n, n);
    const MatrixXd b = random_matrix(rng, n, 2);
    const Subspace v_star = baectl::maximal_controlled_invariant(
        a, Subspace::image(b), Subspace::kernel(random_matrix(rng, 1, n)));
    if (v_star.dim() == 0) continue;
    const MatrixXd f = baectl::state_feedback_friend(a, b, v_star);
    const MatrixXd closed = a + b * f;
    const MatrixXd residual =
        (MatrixXd::Identity(n, n) - v_star.projector()) * closed * v_star.basis();
    CHECK(residual.norm() < 100.0 * baectl::kDefaultRankTol *
                                std::max(1.0, closed.norm()));
  }
}

TEST_CASE("operations are invariant under change of spanning set") {
  std::mt19937 rng(111);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 4 + trial % 4;
    const MatrixXd span_a = random_matrix(rng, n, 3);
    // Same column space, different spanning set (invertible recombination).
    MatrixXd mix;
    do {
      mix = random_matrix(rng, 3, 3);
    } while (std::abs(mix.determinant()) < 1e-2);
    const Subspace v1 = Subspace::image(span_a);
    const Subspace v2 = Subspace::image(span_a * mix);
    REQUIRE(v1.same_space_as(v2));

    const MatrixXd a = random_matrix(rng, n, n);
    const Subspace w = Subspace::image(random_matrix(rng, n, 2));
    CHECK(sum(v1, w).same_space_as(sum(v2, w)));
    CHECK(intersect(v1, w).same_space_as(intersect(v2, w)));
    CHECK(preimage(a, v1).same_space_as(preimage(a, v2)));
    CHECK(apply(a, v1).same_space_as(apply(a, v2)));
  }
}

TEST_CASE("computed bases stay orthonormal through operation chains") {
  std::mt19937 rng(121);
  const MatrixXd a = random_matrix(rng, 6, 6);
  const Subspace v = Subspace::image(random_matrix(rng, 6, 3));
  const Subspace w = Subspace::kernel(random_matrix(rng, 2, 6));
  for (const Subspace& s :
       {v, w, sum(v, w), intersect(v, w), preimage(a, v), apply(a, w),
        baectl::maximal_controlled_invariant(a, v, w)}) {
    const MatrixXd gram = s.basis().transpose() * s.basis();
    CHECK((gram - MatrixXd::Identity(s.dim(), s.dim())).norm() < 1e-12);
  }
}

TEST_CASE("zero vector is always a member; tolerance propagates") {
  const Subspace v = Subspace::image(MatrixXd::Identity(3, 3).leftCols(1), 1e-6);
  CHECK(v.contains_vector(VectorXd::Zero(3)));
  const Subspace w = Subspace::image(MatrixXd::Identity(3, 3).rightCols(1), 1e-9);
  CHECK(sum(v, w).tol() == doctest::Approx(1e-6));
}

TEST_CASE("dimension mismatch is rejected") {
  const Subspace v3 = Subspace::full(3);
  const Subspace v4 = Subspace::full(4);
  CHECK_THROWS_AS(sum(v3, v4), std::invalid_argument);
  CHECK_THROWS_AS(intersect(v3, v4), std::invalid_argument);
  CHECK_THROWS_AS(v3.contains(v4), std::invalid_argument);
}
