#pragma once

// Complex linear algebra on the truncated spin-1/2 x oscillator Hilbert space:
// operator construction, exact unitary evolution, expectations and truncation
// safety checks. Everything here is immutable after construction and all
// operations are pure functions, so concurrent evaluation is safe.
//
// Units: hbar = 1 throughout the library. Energies and couplings are angular
// frequencies in rad/s, times in seconds.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ionsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kNormTol = 1e-12;
inline constexpr double kHermTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kTruncationTol = 1e-10;

/// Tri-state structural flag attached to operator matrices.
enum class Flag : std::uint8_t { unknown, yes, no };

/// Which tensor factor a matrix acts on.
enum class Subsystem : std::uint8_t { spin, motion, joint };

enum class SpinKind : std::uint8_t { identity, sigma_plus, sigma_minus, sigma_z };

namespace detail {
std::string truncation_message(double leaked);
}

/// Physics error: population leaked into the top of the truncated Fock space.
struct TruncationError : std::runtime_error {
  double leaked;
  explicit TruncationError(double leaked_probability)
      : std::runtime_error(detail::truncation_message(leaked_probability)),
        leaked(leaked_probability) {}
};

/// Truncated joint space of a spin-1/2 tensored with a harmonic oscillator
/// keeping Fock levels 0..n_max.
///
/// Basis ordering is fixed and spin-major: index = s*(n_max+1) + n with
/// s in {0,1} and n in {0..n_max}. Spin s=0 is |down> and s=1 is |up>.
/// (In the interferometer mapping, |down> plays the role of the one-photon
/// state |1>_a and |up> the role of |0>_a.)
struct HilbertSpace {
  int n_max;

  explicit HilbertSpace(int n_max_) : n_max(n_max_) {
    if (n_max < 1) throw std::invalid_argument("HilbertSpace: n_max must be >= 1");
  }

  int motional_dim() const { return n_max + 1; }
  int dim() const { return 2 * (n_max + 1); }

  int index(int spin, int n) const {
    if (spin < 0 || spin > 1 || n < 0 || n > n_max)
      throw std::invalid_argument("HilbertSpace::index: label out of range");
    return spin * (n_max + 1) + n;
  }
  int spin_of(int index) const { return index / (n_max + 1); }
  int fock_of(int index) const { return index % (n_max + 1); }

  bool operator==(const HilbertSpace&) const = default;
};

/// Normalized state vector over the joint basis, carrying arbitrary
/// amplitudes c_{down,n}, c_{up,n}.
struct StateVector {
  HilbertSpace space;
  Vector amps;

  StateVector(const HilbertSpace& s, Vector a);

  /// |spin, n> basis state.
  static StateVector basis(const HilbertSpace& s, int spin, int n);

  /// Builds a state from raw amplitudes, normalizing them. Rejects the zero
  /// vector.
  static StateVector from_amplitudes(const HilbertSpace& s, Vector a);

  double norm() const { return amps.norm(); }
  void check_normalized(double tol = kNormTol) const;

  cplx amplitude(int spin, int n) const { return amps(space.index(spin, n)); }
  double population(int spin, int n) const { return std::norm(amplitude(spin, n)); }
};

/// Dense operator on one subsystem (or the joint space) with tri-state
/// hermitian/unitary flags. Setting a flag to `yes` is a checked claim:
/// verify_flags() enforces max|M - M^dag| < 1e-12 resp. max|M^dag M - I| < 1e-10.
struct OperatorMatrix {
  HilbertSpace space;
  Subsystem subsystem;
  Matrix m;
  Flag hermitian = Flag::unknown;
  Flag unitary = Flag::unknown;

  OperatorMatrix(const HilbertSpace& s, Subsystem sub, Matrix mat,
                 Flag herm = Flag::unknown, Flag unit = Flag::unknown);

  int dim() const { return static_cast<int>(m.rows()); }
  void verify_flags() const;
  OperatorMatrix adjoint() const;
};

// --- operator construction -------------------------------------------------

/// Motional lowering operator a on the truncated space: <n-1|a|n> = sqrt(n).
OperatorMatrix lowering_op(const HilbertSpace& space);
/// a^dag = adjoint of lowering_op (the top transition n_max -> n_max+1 is cut).
OperatorMatrix raising_op(const HilbertSpace& space);
/// Number operator a^dag a.
OperatorMatrix number_op(const HilbertSpace& space);
/// Motional identity.
OperatorMatrix motional_identity(const HilbertSpace& space);

/// 2x2 spin operators. sigma_pm follow the paper convention
/// sigma_pm = sigma_x +- i*sigma_y, i.e. sigma_plus = 2|up><down|.
OperatorMatrix spin_op(const HilbertSpace& space, SpinKind kind);

/// Tensor product spin (x) motion in the spin-major basis ordering.
OperatorMatrix embed(const OperatorMatrix& spin, const OperatorMatrix& motion);

// --- dynamics ---------------------------------------------------------------

/// exp(-i H t) via Hermitian eigendecomposition; unitary to machine precision
/// at the dimensions used here. Throws on non-Hermitian input.
OperatorMatrix hermitian_propagator(const OperatorMatrix& H, double t);

/// psi' = exp(-i H t) psi. Norm preserved within 1e-12 (checked).
StateVector evolve(const OperatorMatrix& H, double t, const StateVector& psi);

/// <psi| op |psi>. Real within 1e-12 when op is hermitian.
cplx expectation(const OperatorMatrix& op, const StateVector& psi);

// --- truncation safety ------------------------------------------------------

struct TruncationReport {
  bool ok;
  double leaked;  // population summed over the top two Fock levels, both spins
};

/// Sums population in the top two Fock levels (both spins); violation iff the
/// sum exceeds tol. A violation is a reported state here; callers escalate it
/// to TruncationError.
TruncationReport truncation_guard(const StateVector& psi, double tol = kTruncationTol);

// --- dense-matrix utilities --------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = kHermTol);
bool is_unitary(const Matrix& m, double tol = kUnitaryTol);
/// Largest singular value.
double spectral_norm(const Matrix& m);
/// Spectral-norm distance ||A - e^{i theta} B|| with the global phase theta
/// chosen to maximize |tr(B^dag A)|.
double phase_aligned_distance(const Matrix& a, const Matrix& b);
/// Hermitian K with U = exp(-i K), principal branch (eigenphases in (-pi, pi]).
/// U must be unitary (it is normal, so its Schur form is diagonal).
Matrix principal_generator(const Matrix& u);

}  // namespace ionsim
