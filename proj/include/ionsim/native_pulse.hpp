#pragma once

// The native resonant laser-ion interactions: their Hamiltonians, pulse
// unitaries, Rabi frequencies, pi/2 durations and the Lamb-Dicke validity
// check.

#include "ionsim/hilbert.hpp"

namespace ionsim {

/// Trap and beam geometry. Only eta and (for bookkeeping) omega_z enter the
/// dynamics; omega_0 and the mass are informational. eta can be set directly
/// or derived as delta_k * z0 with z0 = sqrt(hbar / (2 m omega_z)).
struct TrapConfig {
  double omega_z = 0.0;   // motional frequency, rad/s
  double omega_0 = 0.0;   // spin splitting, rad/s (informational)
  double mass = 0.0;      // ion mass, kg (informational)
  double delta_k = 0.0;   // wavevector-difference projection, 1/m
  double eta_override = 0.0;  // > 0: use this eta directly

  /// Ground-state wavefunction extent z0 = sqrt(hbar/(2 m omega_z)), meters.
  double z0() const;
  double eta() const;

  /// Throws unless eta() > 0; if mass, delta_k and omega_z are all set the
  /// derived eta must agree with delta_k*z0 within 1e-9 relative.
  void validate() const;

  /// The trap of the experiment: omega_z = 2pi * 3.63 MHz, eta = 0.35,
  /// a 9Be+ ion.
  static TrapConfig paper();
};

/// One native resonant interaction, detuned to epsilon*omega_0 + l*omega_z.
/// epsilon=1 flips the spin; the sign of l selects motional raising (l>0,
/// "blue") versus lowering (l<0, "red"). The supported sideband orders are
/// |l| <= 3 unless extended_orders is passed to validate().
struct PulseSpec {
  int epsilon = 1;       // {0,1}
  int l = 0;             // signed sideband order
  double omega = 0.0;    // coupling strength, rad/s
  double phi = 0.0;      // laser phase, rad
  double duration = 0.0; // seconds

  void validate(bool extended_orders = false) const;
};

/// Hamiltonian of the pulse on the truncated joint space:
///   H = Omega e^{i phi} S M + h.c.
/// with S = |up><down| for epsilon=1 (identity for epsilon=0) and
/// M = (i eta a^dag)^{|l|}/|l|!  for l > 0, (i eta a)^{|l|}/|l|! for l < 0,
/// identity for l = 0. For epsilon=1, l>0 this couples |down,n> <-> |up,n+l>
/// (blue sideband); epsilon=1, l=0 is the carrier.
///
/// The spin-flip factor is the elementary raising matrix, not the factor-2
/// sigma_plus convention, so Omega is the literal carrier Rabi matrix element
/// and the pi/2 time is (pi/4)/Omega_{0,|l|}.
OperatorMatrix native_hamiltonian(const PulseSpec& spec, const TrapConfig& trap,
                                  const HilbertSpace& space,
                                  bool extended_orders = false);

/// Rabi frequency of the |n> -> |n+|l|> transition:
///   Omega_{n,n+|l|} = Omega eta^{|l|} sqrt((n+|l|)!/n!)/|l|!
double rabi_frequency(const PulseSpec& spec, const TrapConfig& trap, int n);

/// Smallest t > 0 with half transfer out of |down,0> (epsilon=1 pulses only):
/// t = (pi/4)/Omega_{0,|l|} under the sin^2(Omega_eff t) Rabi convention.
/// Across orders this scales as t(l)/t(1) = sqrt(|l|!) eta^{1-|l|}.
double pi_over_2_duration(const PulseSpec& spec, const TrapConfig& trap);

/// U = exp(-i H_{eps,l} * duration), unitary flag set and verified.
OperatorMatrix pulse_unitary(const PulseSpec& spec, const TrapConfig& trap,
                             const HilbertSpace& space, bool extended_orders = false);

struct LambDickeReport {
  double value;  // eta^2 <(a + a^dag)^2>
  bool ok;       // warn when value > 0.25
};

/// Lamb-Dicke figure of merit eta^2 <(a+a^dag)^2> for the given state.
LambDickeReport lamb_dicke_check(const StateVector& psi, const TrapConfig& trap);

}  // namespace ionsim
