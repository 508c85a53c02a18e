#include "ionsim/hilbert.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace ionsim {

namespace detail {
std::string truncation_message(double leaked) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "truncation guard violation: leaked probability %.3e", leaked);
  return buf;
}
}  // namespace detail

StateVector::StateVector(const HilbertSpace& s, Vector a) : space(s), amps(std::move(a)) {
  if (amps.size() != space.dim())
    throw std::invalid_argument("StateVector: amplitude count must equal space.dim()");
}

StateVector StateVector::basis(const HilbertSpace& s, int spin, int n) {
  Vector a = Vector::Zero(s.dim());
  a(s.index(spin, n)) = 1.0;
  return StateVector(s, std::move(a));
}

StateVector StateVector::from_amplitudes(const HilbertSpace& s, Vector a) {
  double nrm = a.norm();
  if (!(nrm > 0.0))
    throw std::invalid_argument("StateVector: cannot normalize the zero vector");
  return StateVector(s, a / nrm);
}

void StateVector::check_normalized(double tol) const {
  if (std::abs(norm() - 1.0) > tol)
    throw std::runtime_error("StateVector: norm deviates from 1 by more than tolerance");
}

OperatorMatrix::OperatorMatrix(const HilbertSpace& s, Subsystem sub, Matrix mat,
                               Flag herm, Flag unit)
    : space(s), subsystem(sub), m(std::move(mat)), hermitian(herm), unitary(unit) {
  if (m.rows() != m.cols()) throw std::invalid_argument("OperatorMatrix: matrix must be square");
  int expected = sub == Subsystem::spin     ? 2
                 : sub == Subsystem::motion ? s.motional_dim()
                                            : s.dim();
  if (m.rows() != expected)
    throw std::invalid_argument("OperatorMatrix: dimension does not match subsystem");
}

void OperatorMatrix::verify_flags() const {
  if (hermitian == Flag::yes && !is_hermitian(m, kHermTol))
    throw std::runtime_error("OperatorMatrix: hermitian flag set but matrix is not hermitian");
  if (unitary == Flag::yes && !is_unitary(m, kUnitaryTol))
    throw std::runtime_error("OperatorMatrix: unitary flag set but matrix is not unitary");
}

OperatorMatrix OperatorMatrix::adjoint() const {
  return OperatorMatrix(space, subsystem, m.adjoint(), hermitian, unitary);
}

OperatorMatrix lowering_op(const HilbertSpace& space) {
  int d = space.motional_dim();
  Matrix a = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return OperatorMatrix(space, Subsystem::motion, std::move(a), Flag::no, Flag::no);
}

OperatorMatrix raising_op(const HilbertSpace& space) { return lowering_op(space).adjoint(); }

OperatorMatrix number_op(const HilbertSpace& space) {
  int d = space.motional_dim();
  Matrix n = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = static_cast<double>(k);
  return OperatorMatrix(space, Subsystem::motion, std::move(n), Flag::yes, Flag::no);
}

OperatorMatrix motional_identity(const HilbertSpace& space) {
  return OperatorMatrix(space, Subsystem::motion,
                        Matrix::Identity(space.motional_dim(), space.motional_dim()),
                        Flag::yes, Flag::yes);
}

OperatorMatrix spin_op(const HilbertSpace& space, SpinKind kind) {
  // Basis order (|down>, |up>); sigma_pm = sigma_x +- i sigma_y.
  Matrix s = Matrix::Zero(2, 2);
  Flag herm = Flag::no;
  switch (kind) {
    case SpinKind::identity:
      s = Matrix::Identity(2, 2);
      herm = Flag::yes;
      break;
    case SpinKind::sigma_plus:
      s(1, 0) = 2.0;  // 2|up><down|
      break;
    case SpinKind::sigma_minus:
      s(0, 1) = 2.0;  // 2|down><up|
      break;
    case SpinKind::sigma_z:
      s(0, 0) = -1.0;
      s(1, 1) = 1.0;
      herm = Flag::yes;
      break;
  }
  return OperatorMatrix(space, Subsystem::spin, std::move(s), herm, Flag::unknown);
}

OperatorMatrix embed(const OperatorMatrix& spin, const OperatorMatrix& motion) {
  if (spin.subsystem != Subsystem::spin || spin.dim() != 2)
    throw std::invalid_argument("embed: first argument must be a 2x2 spin operator");
  if (motion.subsystem != Subsystem::motion)
    throw std::invalid_argument("embed: second argument must be a motional operator");
  if (!(spin.space == motion.space))
    throw std::invalid_argument("embed: operands live on different spaces");
  Flag herm = (spin.hermitian == Flag::yes && motion.hermitian == Flag::yes) ? Flag::yes
                                                                             : Flag::unknown;
  return OperatorMatrix(spin.space, Subsystem::joint, kron(spin.m, motion.m), herm,
                        Flag::unknown);
}

OperatorMatrix hermitian_propagator(const OperatorMatrix& H, double t) {
  if (H.hermitian == Flag::no || !is_hermitian(H.m, kHermTol))
    throw std::invalid_argument("hermitian_propagator: Hamiltonian must be hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(H.m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_propagator: eigendecomposition failed");
  const auto& w = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  Vector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    phases(k) = std::exp(cplx(0.0, -w(k) * t));
  Matrix u = v * phases.asDiagonal() * v.adjoint();
  return OperatorMatrix(H.space, H.subsystem, std::move(u), Flag::unknown, Flag::yes);
}

StateVector evolve(const OperatorMatrix& H, double t, const StateVector& psi) {
  if (H.subsystem != Subsystem::joint || H.dim() != psi.space.dim() || !(H.space == psi.space))
    throw std::invalid_argument("evolve: Hamiltonian and state dimensions do not match");
  OperatorMatrix u = hermitian_propagator(H, t);
  StateVector out(psi.space, u.m * psi.amps);
  out.check_normalized(kNormTol);
  return out;
}

cplx expectation(const OperatorMatrix& op, const StateVector& psi) {
  if (op.dim() != psi.space.dim() || op.subsystem != Subsystem::joint)
    throw std::invalid_argument("expectation: operator must act on the joint space of psi");
  return psi.amps.dot(op.m * psi.amps);  // Eigen dot conjugates the left factor
}

TruncationReport truncation_guard(const StateVector& psi, double tol) {
  const HilbertSpace& s = psi.space;
  double leaked = 0.0;
  for (int spin = 0; spin <= 1; ++spin)
    for (int n = s.n_max - 1; n <= s.n_max; ++n) leaked += psi.population(spin, n);
  return TruncationReport{leaked <= tol, leaked};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& m, double tol) {
  return max_abs(m - m.adjoint()) < tol;
}

bool is_unitary(const Matrix& m, double tol) {
  Matrix g = m.adjoint() * m;
  return max_abs(g - Matrix::Identity(m.rows(), m.cols())) < tol;
}

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double phase_aligned_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("phase_aligned_distance: shape mismatch");
  cplx tr = (b.adjoint() * a).trace();
  cplx phase = std::abs(tr) > 0 ? tr / std::abs(tr) : cplx(1.0, 0.0);
  return spectral_norm(a - phase * b);
}

Matrix principal_generator(const Matrix& u) {
  if (!is_unitary(u, 1e-8))
    throw std::invalid_argument("principal_generator: input is not unitary");
  // A unitary matrix is normal, so its Schur form is diagonal up to roundoff.
  Eigen::ComplexSchur<Matrix> schur(u);
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("principal_generator: Schur decomposition failed");
  const Matrix& t = schur.matrixT();
  Matrix off = t;
  off.diagonal().setZero();
  if (max_abs(off) > 1e-8)
    throw std::runtime_error("principal_generator: Schur form not diagonal (input not normal?)");
  Vector theta(t.rows());
  for (Eigen::Index k = 0; k < t.rows(); ++k) {
    cplx lambda = t(k, k);
    theta(k) = -std::arg(lambda);  // U = exp(-iK) => eigenphase = -arg(lambda)
  }
  Matrix k = schur.matrixU() * theta.asDiagonal() * schur.matrixU().adjoint();
  return 0.5 * (k + k.adjoint().eval());  // clean roundoff
}

}  // namespace ionsim
