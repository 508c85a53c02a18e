#pragma once

// The n-th order Mach-Zehnder interferometer on the ion: two pi/2 pulses on
// the n-th blue sideband enclosing a trap-frequency-shift phase segment.
// Mode mapping: the one-photon input state |1>_a is the spin |down> state,
// |0>_a is |up>, and the optical mode b is the motional mode. Detection
// measures n_a'' = |1><1|_a = |down><down| (x) I.

#include <cstdint>
#include <vector>

#include "ionsim/compiler.hpp"
#include "ionsim/native_pulse.hpp"

namespace ionsim {

struct InterferometerConfig {
  int order = 1;                 // beamsplitter order n
  TrapConfig trap = TrapConfig::paper();
  double omega_pulse = 0.0;      // Omega per beamsplitter, rad/s (0: see defaults())
  double phi1 = 0.0, phi2 = 0.0; // beamsplitter pulse phases
  double delta_omega_z = 0.0;    // trap-frequency shift, rad/s
  double contrast = 1.0;         // multiplicative fringe contrast C
  int n_max = 0;                 // 0: defaults to 2*order + 6

  HilbertSpace space() const { return HilbertSpace(n_max > 0 ? n_max : 2 * order + 6); }
  void validate() const;

  /// Paper-flavored defaults for a given order: eta = 0.35, omega_z = 2pi*3.63
  /// MHz, omega_pulse chosen so the first-order pi/2 time is 4.0 us, and a
  /// 2pi*10 kHz trap shift.
  static InterferometerConfig defaults(int order);
};

enum class FringeMode : std::uint8_t { analytic, statevector, montecarlo };

struct FringePoint {
  double t;      // phase-segment duration, s
  double phi;    // delta_omega_z * t
  double p_est;  // estimated (or exact) detection probability
  long long shots;
};

struct FringeDataset {
  std::vector<FringePoint> points;
  FringeMode mode = FringeMode::statevector;
};

/// |1>_a |0>_b = |down, 0>.
StateVector prepare_input(const HilbertSpace& space);

enum class BeamsplitterSlot : std::uint8_t { first, second };

/// pi/2 pulse unitary on the order-n blue sideband with phase phi1 or phi2.
OperatorMatrix beamsplitter(const InterferometerConfig& config, BeamsplitterSlot which);

/// U = exp(-i delta_omega_z t (I x a^dag a)); |n> acquires e^{-i n phi} with
/// phi = delta_omega_z * t.
OperatorMatrix phase_segment(double delta_omega_z, double t, const HilbertSpace& space);

/// Full state-vector pipeline: prepare -> first beamsplitter -> phase segment
/// -> second beamsplitter -> <n_a''>. Equals (1/2)[1 - cos(n phi)] for the
/// calibrated phases (phi2 = phi1). Throws TruncationError on leakage.
double run_point(const InterferometerConfig& config, double t);

/// Multiplicative contrast: C * p_ideal (zero baseline).
double apply_contrast(double p_ideal, double contrast);

/// Sweeps the phase-segment duration over t_grid. shots_per_point = 0 gives
/// the noiseless state-vector probability; otherwise p_est is the Bernoulli
/// sample mean over that many draws, each point on its own derived random
/// stream.
FringeDataset sweep(const InterferometerConfig& config, const std::vector<double>& t_grid,
                    long long shots_per_point, std::uint64_t seed);

/// Closed-form dataset (C/2)[1 - cos(n delta_omega_z t)], for fit tests.
FringeDataset sweep_analytic(const InterferometerConfig& config,
                             const std::vector<double>& t_grid);

struct FringeFit {
  double frequency = 0.0;     // rad/s
  double contrast = 0.0;
  double phase_offset = 0.0;  // rad, model p = (C/2)[1 - cos(w t + theta)]
  double residual = 0.0;      // rms residual
  bool frequency_indeterminate = false;
};

/// Least-squares fit of p(t) = (C/2)[1 - cos(w t + theta)]; initial frequency
/// from the discrete-spectrum peak, then refined. Needs >= 8 points spanning
/// at least one fringe period (unless the data is flat, which returns C = 0
/// with the frequency flagged indeterminate).
FringeFit fit_fringe(const FringeDataset& dataset);

}  // namespace ionsim
