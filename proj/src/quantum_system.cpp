#include "baectl/quantum_system.hpp"

#include <complex>
#include <stdexcept>

#include <json.hpp>

namespace baectl {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using std::complex;

// [a; a*] = U [q-stack; p-stack], U unitary.
MatrixXcd ladder_transform(int n) {
  MatrixXcd u(2 * n, 2 * n);
  const MatrixXcd id = MatrixXcd::Identity(n, n);
  const complex<double> i(0.0, 1.0);
  u.topLeftCorner(n, n) = id;
  u.topRightCorner(n, n) = i * id;
  u.bottomLeftCorner(n, n) = id;
  u.bottomRightCorner(n, n) = -i * id;
  return u / std::sqrt(2.0);
}

// Quadrature matrix (2p x 2q) -> ladder-basis matrix via P and U sandwiches.
MatrixXcd quad_to_ladder(const MatrixXd& m, int p, int q) {
  const MatrixXd tilde =
      mode_permutation(p) * m * mode_permutation(q).transpose();
  return ladder_transform(p) * tilde.cast<complex<double>>() *
         ladder_transform(q).adjoint();
}

MatrixXd ladder_to_quad(const MatrixXcd& minus, const MatrixXcd& plus) {
  const int p = static_cast<int>(minus.rows());
  const int q = static_cast<int>(minus.cols());
  MatrixXcd full(2 * p, 2 * q);
  full.topLeftCorner(p, q) = minus;
  full.topRightCorner(p, q) = plus;
  full.bottomLeftCorner(p, q) = plus.conjugate();
  full.bottomRightCorner(p, q) = minus.conjugate();
  const MatrixXcd tilde = ladder_transform(p).adjoint() * full * ladder_transform(q);
  const MatrixXcd m = mode_permutation(p).cast<complex<double>>().transpose() *
                      tilde * mode_permutation(q).cast<complex<double>>();
  if (m.imag().norm() > 1e-10 * std::max(1.0, m.real().norm()))
    throw std::runtime_error("from_annihilation: blocks do not describe a real system");
  return m.real();
}

Eigen::MatrixXd stack_inputs(const QuadratureSystem& sys) {
  MatrixXd b(sys.state_dim(), 2 * sys.channels());
  for (int j = 0; j < sys.channels(); ++j) b.middleCols(2 * j, 2) = sys.B[j];
  return b;
}

Eigen::MatrixXd stack_outputs(const QuadratureSystem& sys) {
  MatrixXd c(2 * sys.channels(), sys.state_dim());
  for (int j = 0; j < sys.channels(); ++j) c.middleRows(2 * j, 2) = sys.C[j];
  return c;
}

nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return MatrixXd(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols)
      throw std::invalid_argument("matrix_from_json: ragged rows");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

}  // namespace

Eigen::Matrix2d symplectic2() {
  Eigen::Matrix2d j;
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

Eigen::MatrixXd symplectic(int n_modes) {
  if (n_modes < 1) throw std::invalid_argument("symplectic: need at least one mode");
  MatrixXd j = MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) j.block<2, 2>(2 * k, 2 * k) = symplectic2();
  return j;
}

Eigen::MatrixXd mode_permutation(int n_modes) {
  if (n_modes < 1) throw std::invalid_argument("mode_permutation: need at least one mode");
  MatrixXd p = MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    p(k, 2 * k) = 1.0;
    p(n_modes + k, 2 * k + 1) = 1.0;
  }
  return p;
}

QuadratureSystem build_system(const Eigen::MatrixXd& hamiltonian,
                              const std::vector<Eigen::VectorXcd>& couplings) {
  const Eigen::Index dim = hamiltonian.rows();
  if (dim < 2 || dim % 2 != 0 || hamiltonian.cols() != dim)
    throw std::invalid_argument("build_system: Hamiltonian must be 2n x 2n");
  if ((hamiltonian - hamiltonian.transpose()).norm() >
      1e-12 * std::max(1.0, hamiltonian.norm()))
    throw std::invalid_argument("build_system: Hamiltonian matrix must be symmetric");

  QuadratureSystem sys;
  sys.n_modes = static_cast<int>(dim / 2);
  const MatrixXd j_n = symplectic(sys.n_modes);
  const Eigen::Matrix2d j2 = symplectic2();

  MatrixXd coupling_drift = MatrixXd::Zero(dim, dim);
  for (const auto& c : couplings) {
    if (c.size() != dim)
      throw std::invalid_argument("build_system: coupling vector has wrong size");
    MatrixXd c_j(2, dim);
    c_j.row(0) = std::sqrt(2.0) * c.real().transpose();
    c_j.row(1) = std::sqrt(2.0) * c.imag().transpose();
    sys.C.push_back(c_j);
    sys.B.push_back(j_n * c_j.transpose() * j2);
    coupling_drift += c_j.transpose() * j2 * c_j / 2.0;
  }
  sys.A = j_n * (hamiltonian + coupling_drift);
  return sys;
}

RealizabilityReport check_physical_realizability(const QuadratureSystem& sys,
                                                 double tol) {
  if (sys.B.size() != sys.C.size())
    throw std::invalid_argument("check_physical_realizability: channel count mismatch");
  const MatrixXd j_n = symplectic(sys.n_modes);
  const Eigen::Matrix2d j2 = symplectic2();

  MatrixXd dyn = sys.A * j_n + j_n * sys.A.transpose();
  for (const auto& b : sys.B) dyn += b * j2 * b.transpose();

  RealizabilityReport report;
  report.residual_dynamics = dyn.norm();
  for (std::size_t j = 0; j < sys.B.size(); ++j) {
    const double r = (sys.B[j] - j_n * sys.C[j].transpose() * j2).norm();
    report.residual_coupling = std::max(report.residual_coupling, r);
  }
  const double scale = std::max(1.0, sys.A.norm());
  report.pass = report.residual_dynamics < tol * scale &&
                report.residual_coupling < tol * scale;
  return report;
}

AnnihilationSystem to_annihilation(const QuadratureSystem& sys) {
  AnnihilationSystem ann;
  ann.n_modes = sys.n_modes;
  ann.channels = sys.channels();
  const int n = sys.n_modes;
  const int m = sys.channels();

  const MatrixXcd a_full = quad_to_ladder(sys.A, n, n);
  ann.a_minus = a_full.topLeftCorner(n, n);
  ann.a_plus = a_full.topRightCorner(n, n);

  const MatrixXcd b_full = quad_to_ladder(stack_inputs(sys), n, m);
  ann.b_minus = b_full.topLeftCorner(n, m);
  ann.b_plus = b_full.topRightCorner(n, m);

  const MatrixXcd c_full = quad_to_ladder(stack_outputs(sys), m, n);
  ann.c_minus = c_full.topLeftCorner(m, n);
  ann.c_plus = c_full.topRightCorner(m, n);

  // The quadrature output is W^out = C x + W, so D is the identity.
  ann.d_minus = MatrixXcd::Identity(m, m);
  ann.d_plus = MatrixXcd::Zero(m, m);
  return ann;
}

QuadratureSystem from_annihilation(const AnnihilationSystem& ann) {
  QuadratureSystem sys;
  sys.n_modes = ann.n_modes;
  sys.A = ladder_to_quad(ann.a_minus, ann.a_plus);
  const MatrixXd b = ladder_to_quad(ann.b_minus, ann.b_plus);
  const MatrixXd c = ladder_to_quad(ann.c_minus, ann.c_plus);
  for (int j = 0; j < ann.channels; ++j) {
    sys.B.push_back(b.middleCols(2 * j, 2));
    sys.C.push_back(c.middleRows(2 * j, 2));
  }
  return sys;
}

bool is_passive(const QuadratureSystem& sys, double tol) {
  if (!check_physical_realizability(sys).pass)
    throw std::runtime_error("is_passive: system is not physically realizable");
  const MatrixXd j_n = symplectic(sys.n_modes);
  const MatrixXd j_m = symplectic(sys.channels());
  const MatrixXd b = stack_inputs(sys);
  const double scale_a = std::max(1.0, sys.A.norm());
  const double scale_b = std::max(1.0, b.norm());
  return (j_n * sys.A * j_n + sys.A).norm() <= tol * scale_a &&
         (j_n * b * j_m + b).norm() <= tol * scale_b;
}

bool is_passive_direct(const Eigen::MatrixXd& r_controller,
                       const Eigen::MatrixXd& r_plant_side,
                       const Eigen::MatrixXd& r_controller_side,
                       double tol) {
  const Eigen::Index dim_k = r_controller.rows();
  const Eigen::Index dim_n = r_controller_side.cols();
  if (r_controller.cols() != dim_k || dim_k % 2 != 0 || dim_n % 2 != 0 ||
      r_plant_side.rows() != dim_n || r_plant_side.cols() != dim_k ||
      r_controller_side.rows() != dim_k)
    throw std::invalid_argument("is_passive_direct: inconsistent dimensions");

  const double scale_k = std::max(1.0, r_controller.norm());
  const double scale_2 = std::max(1.0, r_controller_side.norm());
  if ((r_controller - r_controller.transpose()).norm() > tol * scale_k ||
      (r_plant_side.transpose() - r_controller_side).norm() > tol * scale_2)
    throw std::runtime_error(
        "is_passive_direct: interaction Hamiltonian violates realizability");

  const MatrixXd j_k = symplectic(static_cast<int>(dim_k / 2));
  const MatrixXd j_n = symplectic(static_cast<int>(dim_n / 2));
  return (j_k * r_controller * j_k + r_controller).norm() <= tol * scale_k &&
         (j_k * r_controller_side * j_n + r_controller_side).norm() <= tol * scale_2;
}

void to_json(nlohmann::json& j, const QuadratureSystem& sys) {
  j = nlohmann::json{{"units", "rad/s"},
                     {"n_modes", sys.n_modes},
                     {"A", matrix_to_json(sys.A)}};
  nlohmann::json b_list = nlohmann::json::array();
  for (const auto& b : sys.B) b_list.push_back(matrix_to_json(b));
  nlohmann::json c_list = nlohmann::json::array();
  for (const auto& c : sys.C) c_list.push_back(matrix_to_json(c));
  j["B_list"] = b_list;
  j["C_list"] = c_list;
  if (sys.force) j["b"] = std::vector<double>(sys.force->data(), sys.force->data() + sys.force->size());
  if (sys.disturbance)
    j["E"] = std::vector<double>(sys.disturbance->data(),
                                 sys.disturbance->data() + sys.disturbance->size());
  if (sys.regulated)
    j["H"] = std::vector<double>(sys.regulated->data(),
                                 sys.regulated->data() + sys.regulated->size());
}

void from_json(const nlohmann::json& j, QuadratureSystem& sys) {
  if (j.value("units", "") != std::string("rad/s"))
    throw std::invalid_argument("QuadratureSystem: missing or unsupported units key");
  sys = QuadratureSystem{};
  sys.n_modes = j.at("n_modes").get<int>();
  sys.A = matrix_from_json(j.at("A"));
  for (const auto& b : j.at("B_list")) sys.B.push_back(matrix_from_json(b));
  for (const auto& c : j.at("C_list")) sys.C.push_back(matrix_from_json(c));
  if (j.contains("b")) {
    const auto v = j.at("b").get<std::vector<double>>();
    sys.force = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  if (j.contains("E")) {
    const auto v = j.at("E").get<std::vector<double>>();
    sys.disturbance = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  if (j.contains("H")) {
    const auto v = j.at("H").get<std::vector<double>>();
    sys.regulated = Eigen::Map<const Eigen::RowVectorXd>(v.data(), v.size());
  }
}

}  // namespace baectl
