#include "ionsim/interferometer.hpp"

#include <cmath>
#include <numbers>

#include "ionsim/noise.hpp"
#include "ionsim/rng.hpp"

namespace ionsim {

namespace {
constexpr double kPi = std::numbers::pi;
}

void InterferometerConfig::validate() const {
  if (order < 1) throw std::invalid_argument("InterferometerConfig: order must be >= 1");
  if (contrast < 0.0 || contrast > 1.0)
    throw std::invalid_argument("InterferometerConfig: contrast must be within [0, 1]");
  if (!(omega_pulse > 0.0))
    throw std::invalid_argument("InterferometerConfig: omega_pulse must be positive");
  trap.validate();
  int nm = n_max > 0 ? n_max : 2 * order + 6;
  if (nm < order + 4)
    throw std::invalid_argument("InterferometerConfig: n_max must be >= order + 4");
}

InterferometerConfig InterferometerConfig::defaults(int order) {
  InterferometerConfig c;
  c.order = order;
  c.trap = TrapConfig::paper();
  // First-order pi/2 time of 4.0 us at eta = 0.35.
  c.omega_pulse = (kPi / 4.0) / (4.0e-6 * c.trap.eta());
  c.delta_omega_z = 2.0 * kPi * 1.0e4;
  return c;
}

StateVector prepare_input(const HilbertSpace& space) {
  return StateVector::basis(space, 0, 0);  // |down, 0> = |1>_a |0>_b
}

OperatorMatrix beamsplitter(const InterferometerConfig& config, BeamsplitterSlot which) {
  config.validate();
  PulseSpec spec{1, config.order, config.omega_pulse,
                 which == BeamsplitterSlot::first ? config.phi1 : config.phi2, 0.0};
  spec.duration = pi_over_2_duration(spec, config.trap);
  // orders beyond the demonstrated 1..3 are allowed here; the formula
  // generalizes even though such drives are untested physics
  return pulse_unitary(spec, config.trap, config.space(), /*extended_orders=*/true);
}

OperatorMatrix phase_segment(double delta_omega_z, double t, const HilbertSpace& space) {
  if (t < 0.0) throw std::invalid_argument("phase_segment: t must be >= 0");
  Matrix u = Matrix::Zero(space.dim(), space.dim());
  for (int s = 0; s <= 1; ++s)
    for (int n = 0; n <= space.n_max; ++n)
      u(space.index(s, n), space.index(s, n)) = std::exp(cplx(0.0, -delta_omega_z * t * n));
  return OperatorMatrix(space, Subsystem::joint, std::move(u), Flag::unknown, Flag::yes);
}

namespace {

double detection_probability(const StateVector& psi) {
  double p = 0.0;
  for (int n = 0; n <= psi.space.n_max; ++n) p += psi.population(0, n);
  return std::min(1.0, std::max(0.0, p));
}

StateVector guarded_apply(const Matrix& u, const StateVector& psi) {
  StateVector out(psi.space, u * psi.amps);
  auto guard = truncation_guard(out);
  if (!guard.ok) throw TruncationError(guard.leaked);
  return out;
}

}  // namespace

double run_point(const InterferometerConfig& config, double t) {
  config.validate();
  HilbertSpace space = config.space();
  Matrix u1 = beamsplitter(config, BeamsplitterSlot::first).m;
  Matrix u2 = beamsplitter(config, BeamsplitterSlot::second).m;
  Matrix ph = phase_segment(config.delta_omega_z, t, space).m;
  StateVector psi = prepare_input(space);
  psi = guarded_apply(u1, psi);
  psi = guarded_apply(ph, psi);
  psi = guarded_apply(u2, psi);
  return detection_probability(psi);
}

double apply_contrast(double p_ideal, double contrast) {
  if (p_ideal < 0.0 || p_ideal > 1.0 || contrast < 0.0 || contrast > 1.0)
    throw std::invalid_argument("apply_contrast: inputs out of range");
  return contrast * p_ideal;
}

FringeDataset sweep(const InterferometerConfig& config, const std::vector<double>& t_grid,
                    long long shots_per_point, std::uint64_t seed) {
  config.validate();
  if (t_grid.empty()) throw std::invalid_argument("sweep: empty t grid");
  if (shots_per_point < 0) throw std::invalid_argument("sweep: shots must be >= 0");

  HilbertSpace space = config.space();
  Matrix u1 = beamsplitter(config, BeamsplitterSlot::first).m;
  Matrix u2 = beamsplitter(config, BeamsplitterSlot::second).m;
  StateVector input = prepare_input(space);

  FringeDataset ds;
  ds.mode = shots_per_point > 0 ? FringeMode::montecarlo : FringeMode::statevector;
  ds.points.reserve(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    double t = t_grid[i];
    Matrix ph = phase_segment(config.delta_omega_z, t, space).m;
    StateVector psi = guarded_apply(u1, input);
    psi = guarded_apply(ph, psi);
    psi = guarded_apply(u2, psi);
    double p = apply_contrast(detection_probability(psi), config.contrast);
    double p_est = p;
    if (shots_per_point > 0) {
      ShotRecord rec = sample_shots(p, shots_per_point, derive_stream(seed, i));
      double sum = 0.0;
      for (auto b : rec.outcomes) sum += b;
      p_est = sum / static_cast<double>(rec.size());
    }
    ds.points.push_back({t, config.delta_omega_z * t, p_est, shots_per_point});
  }
  return ds;
}

FringeDataset sweep_analytic(const InterferometerConfig& config,
                             const std::vector<double>& t_grid) {
  config.validate();
  FringeDataset ds;
  ds.mode = FringeMode::analytic;
  for (double t : t_grid) {
    double phi = config.delta_omega_z * t;
    double p = config.contrast * 0.5 * (1.0 - std::cos(config.order * phi));
    ds.points.push_back({t, phi, p, 0});
  }
  return ds;
}

namespace {

// Linear LS of p ~ A + Bc cos(wt) + Bs sin(wt) at fixed w; returns SSE and the
// coefficients.
double harmonic_fit(const FringeDataset& ds, double w, double* a_out, double* bc_out,
                    double* bs_out) {
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (const auto& pt : ds.points) {
    Eigen::Vector3d row(1.0, std::cos(w * pt.t), std::sin(w * pt.t));
    ata += row * row.transpose();
    atb += row * pt.p_est;
  }
  Eigen::Vector3d x = ata.ldlt().solve(atb);
  double sse = 0.0;
  for (const auto& pt : ds.points) {
    double model = x(0) + x(1) * std::cos(w * pt.t) + x(2) * std::sin(w * pt.t);
    sse += (pt.p_est - model) * (pt.p_est - model);
  }
  if (a_out) *a_out = x(0);
  if (bc_out) *bc_out = x(1);
  if (bs_out) *bs_out = x(2);
  return sse;
}

}  // namespace

FringeFit fit_fringe(const FringeDataset& dataset) {
  const auto& pts = dataset.points;
  if (pts.size() < 8) throw std::invalid_argument("fit_fringe: need at least 8 points");

  double tmin = pts.front().t, tmax = pts.front().t;
  double pmin = pts.front().p_est, pmax = pts.front().p_est, mean = 0.0;
  for (const auto& pt : pts) {
    tmin = std::min(tmin, pt.t);
    tmax = std::max(tmax, pt.t);
    pmin = std::min(pmin, pt.p_est);
    pmax = std::max(pmax, pt.p_est);
    mean += pt.p_est;
  }
  mean /= static_cast<double>(pts.size());
  double span = tmax - tmin;
  if (!(span > 0.0)) throw std::invalid_argument("fit_fringe: degenerate time grid");

  FringeFit fit;
  if (pmax - pmin < 1e-12) {  // flat data: no fringe to fit
    fit.contrast = 0.0;
    fit.frequency_indeterminate = true;
    return fit;
  }

  // Discrete-spectrum peak, oversampled 4x relative to the natural grid and
  // capped at the Nyquist frequency to keep aliases out.
  int jmax = static_cast<int>(pts.size()) * 2;
  double best_w = 0.0, best_power = -1.0;
  for (int j = 1; j <= jmax; ++j) {
    double w = kPi * j / (2.0 * span);
    cplx acc = 0.0;
    for (const auto& pt : pts) acc += (pt.p_est - mean) * std::exp(cplx(0.0, -w * pt.t));
    double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_w = w;
    }
  }
  if (best_w * span < 2.0 * kPi * 0.99)
    throw std::invalid_argument("fit_fringe: data spans less than one fringe period");

  // Golden-section refinement of the SSE around the peak.
  double lo = best_w * 0.7, hi = best_w * 1.3;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = harmonic_fit(dataset, c, nullptr, nullptr, nullptr);
  double fd = harmonic_fit(dataset, d, nullptr, nullptr, nullptr);
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * best_w; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = harmonic_fit(dataset, c, nullptr, nullptr, nullptr);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = harmonic_fit(dataset, d, nullptr, nullptr, nullptr);
    }
  }
  double w = 0.5 * (lo + hi);
  double a, bc, bs;
  double sse = harmonic_fit(dataset, w, &a, &bc, &bs);
  if (!std::isfinite(sse)) throw std::runtime_error("fit_fringe: fit diverged");

  fit.frequency = w;
  fit.contrast = 2.0 * std::sqrt(bc * bc + bs * bs);
  fit.phase_offset = std::atan2(bs, -bc);
  fit.residual = std::sqrt(sse / static_cast<double>(pts.size()));
  return fit;
}

}  // namespace ionsim
