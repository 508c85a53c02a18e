#include "ionsim/native_pulse.hpp"

#include <cmath>
#include <numbers>

namespace ionsim {

namespace {

constexpr double kHbarSI = 1.054571817e-34;  // J s; only used for z0, see TrapConfig

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

double TrapConfig::z0() const {
  if (mass <= 0.0 || omega_z <= 0.0)
    throw std::invalid_argument("TrapConfig::z0: mass and omega_z must be set");
  return std::sqrt(kHbarSI / (2.0 * mass * omega_z));
}

double TrapConfig::eta() const {
  if (eta_override > 0.0) return eta_override;
  if (delta_k > 0.0 && mass > 0.0 && omega_z > 0.0) return delta_k * z0();
  throw std::invalid_argument("TrapConfig::eta: neither override nor (delta_k, mass, omega_z) set");
}

void TrapConfig::validate() const {
  double e = eta();
  if (!(e > 0.0)) throw std::invalid_argument("TrapConfig: eta must be positive");
  if (eta_override > 0.0 && delta_k > 0.0 && mass > 0.0 && omega_z > 0.0) {
    double derived = delta_k * z0();
    if (std::abs(derived - eta_override) > 1e-9 * derived)
      throw std::invalid_argument("TrapConfig: eta override conflicts with delta_k * z0");
  }
}

TrapConfig TrapConfig::paper() {
  TrapConfig t;
  t.omega_z = 2.0 * std::numbers::pi * 3.63e6;
  t.omega_0 = 2.0 * std::numbers::pi * 1.25e9;
  t.mass = 9.0121831 * 1.66053906892e-27;  // 9Be+
  t.eta_override = 0.35;
  return t;
}

void PulseSpec::validate(bool extended_orders) const {
  if (epsilon != 0 && epsilon != 1)
    throw std::invalid_argument("PulseSpec: epsilon must be 0 or 1");
  if (epsilon == 0 && l == 0)
    throw std::invalid_argument("PulseSpec: (epsilon, l) = (0, 0) is not an interaction");
  if (!(omega > 0.0)) throw std::invalid_argument("PulseSpec: omega must be positive");
  if (duration < 0.0) throw std::invalid_argument("PulseSpec: duration must be >= 0");
  if (!extended_orders && std::abs(l) > 3)
    throw std::invalid_argument("PulseSpec: sideband order |l| > 3 requires the extended-order flag");
}

OperatorMatrix native_hamiltonian(const PulseSpec& spec, const TrapConfig& trap,
                                  const HilbertSpace& space, bool extended_orders) {
  spec.validate(extended_orders);
  trap.validate();
  int al = std::abs(spec.l);
  if (space.n_max < al + 2)
    throw std::invalid_argument("native_hamiltonian: space too small, need n_max >= |l| + 2");

  double eta = trap.eta();
  int d = space.motional_dim();

  // M = (i eta a^dag)^|l| / |l|!   (a instead of a^dag for l < 0)
  Matrix ladder = spec.l >= 0 ? raising_op(space).m : lowering_op(space).m;
  Matrix mot = Matrix::Identity(d, d);
  for (int k = 0; k < al; ++k) mot = ladder * mot;
  cplx scale = std::pow(cplx(0.0, eta), al) / factorial(al);
  mot *= scale;

  // S = elementary raising |up><down| for epsilon=1, identity otherwise.
  Matrix s = Matrix::Zero(2, 2);
  if (spec.epsilon == 1)
    s(1, 0) = 1.0;
  else
    s = Matrix::Identity(2, 2);

  cplx drive = spec.omega * std::exp(cplx(0.0, spec.phi));
  Matrix half = drive * kron(s, mot);
  Matrix h = half + half.adjoint().eval();
  return OperatorMatrix(space, Subsystem::joint, std::move(h), Flag::yes, Flag::no);
}

double rabi_frequency(const PulseSpec& spec, const TrapConfig& trap, int n) {
  if (n < 0) throw std::invalid_argument("rabi_frequency: n must be >= 0");
  int al = std::abs(spec.l);
  double eta = trap.eta();
  double ratio = 1.0;  // (n+|l|)!/n!
  for (int k = n + 1; k <= n + al; ++k) ratio *= k;
  return spec.omega * std::pow(eta, al) * std::sqrt(ratio) / factorial(al);
}

double pi_over_2_duration(const PulseSpec& spec, const TrapConfig& trap) {
  if (spec.epsilon != 1)
    throw std::invalid_argument("pi_over_2_duration: defined only for spin-flip (epsilon=1) pulses");
  double omega_eff = rabi_frequency(spec, trap, 0);
  return (std::numbers::pi / 4.0) / omega_eff;
}

OperatorMatrix pulse_unitary(const PulseSpec& spec, const TrapConfig& trap,
                             const HilbertSpace& space, bool extended_orders) {
  OperatorMatrix h = native_hamiltonian(spec, trap, space, extended_orders);
  OperatorMatrix u = hermitian_propagator(h, spec.duration);
  u.verify_flags();
  return u;
}

LambDickeReport lamb_dicke_check(const StateVector& psi, const TrapConfig& trap) {
  const HilbertSpace& s = psi.space;
  Matrix x = lowering_op(s).m + raising_op(s).m;
  OperatorMatrix x2(s, Subsystem::joint, kron(Matrix::Identity(2, 2), (x * x).eval()),
                    Flag::yes, Flag::unknown);
  double value = trap.eta() * trap.eta() * expectation(x2, psi).real();
  return LambDickeReport{value, value <= 0.25};
}

}  // namespace ionsim
