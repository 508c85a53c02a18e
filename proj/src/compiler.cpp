#include "ionsim/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace ionsim {

namespace {

constexpr double kPi = std::numbers::pi;

Matrix expm_hermitian(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("expm_hermitian: eigendecomposition failed");
  Vector phases(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases(k) = std::exp(cplx(0.0, -es.eigenvalues()(k) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

std::string monomial_name(SpinKind s, int p, int q) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s (a^dag)^%d a^%d", spin_name(s), p, q);
  return buf;
}

// Canonical Hermitian pattern: coeff * X + h.c. with X = spin * (a^dag)^p a^q,
// oriented so that sigma_minus terms fold onto sigma_plus and I/SZ terms have
// p >= q. Self-adjoint patterns (I/SZ with p == q) carry the full (real)
// coefficient and no h.c. partner.
struct Pattern {
  SpinKind spin;
  int p, q;
  cplx coeff;
  bool self_adjoint;
};

bool pattern_self_adjoint(SpinKind s, int p, int q) {
  return (s == SpinKind::identity || s == SpinKind::sigma_z) && p == q;
}

OperatorExpr expand_pattern(SpinKind s, int p, int q, cplx c) {
  OperatorExpr e = OperatorExpr::single(s, p, q, c);
  if (!pattern_self_adjoint(s, p, q)) e.hermitize = true;
  return e.materialized();
}

std::vector<Pattern> canonical_patterns(const OperatorExpr& materialized) {
  std::map<std::tuple<int, int, int>, cplx> acc;
  for (const auto& t : materialized.terms) {
    SpinKind s = t.spin;
    int p = t.p, q = t.q;
    cplx c = t.coeff;
    if (s == SpinKind::sigma_minus) {
      s = SpinKind::sigma_plus;
      std::swap(p, q);
      c = std::conj(c);
    } else if ((s == SpinKind::identity || s == SpinKind::sigma_z) && p < q) {
      std::swap(p, q);
      c = std::conj(c);
    }
    acc[{static_cast<int>(s), p, q}] += c;
  }
  std::vector<Pattern> out;
  for (const auto& [key, c] : acc) {
    auto s = static_cast<SpinKind>(std::get<0>(key));
    int p = std::get<1>(key), q = std::get<2>(key);
    bool self = pattern_self_adjoint(s, p, q);
    cplx coeff = self ? c : c * 0.5;  // both partners of a Hermitian pair folded in
    if (std::abs(coeff) < 1e-14) continue;
    out.push_back({s, p, q, coeff, self});
  }
  return out;
}

using StepKey = std::tuple<int, int, int, double, double, double>;

StepKey step_key(const ProgramStep& s) {
  if (const auto* p = std::get_if<PulseSpec>(&s))
    return {0, p->epsilon, p->l, p->omega, p->phi, p->duration};
  const auto& f = std::get<FreeSegment>(s);
  return {1, 0, 0, f.delta_omega_z, f.t, 0.0};
}

Matrix step_unitary(const ProgramStep& s, const TrapConfig& trap, const HilbertSpace& space,
                    std::map<StepKey, Matrix>& cache) {
  auto key = step_key(s);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Matrix u;
  if (const auto* p = std::get_if<PulseSpec>(&s)) {
    u = pulse_unitary(*p, trap, space).m;
  } else {
    const auto& f = std::get<FreeSegment>(s);
    Matrix n = kron(Matrix::Identity(2, 2), number_op(space).m);
    u = expm_hermitian(f.delta_omega_z * n, f.t);
  }
  cache.emplace(key, u);
  return u;
}

}  // namespace

double PulseProgram::total_duration() const {
  double d = 0.0;
  for (const auto& s : steps) {
    if (const auto* p = std::get_if<PulseSpec>(&s))
      d += p->duration;
    else
      d += std::get<FreeSegment>(s).t;
  }
  return d;
}

PulseProgram negated(const PulseProgram& p) {
  PulseProgram out = p;
  std::reverse(out.steps.begin(), out.steps.end());
  for (auto& s : out.steps) {
    if (auto* pulse = std::get_if<PulseSpec>(&s))
      pulse->phi += kPi;
    else
      std::get<FreeSegment>(s).delta_omega_z = -std::get<FreeSegment>(s).delta_omega_z;
  }
  return out;
}

std::string format_program_text(const PulseProgram& p) {
  std::string out;
  char buf[256];
  for (const auto& s : p.steps) {
    if (const auto* pulse = std::get_if<PulseSpec>(&s)) {
      std::snprintf(buf, sizeof(buf), "PULSE eps=%d l=%d omega=%.17g phi=%.17g t=%.17g\n",
                    pulse->epsilon, pulse->l, pulse->omega, pulse->phi, pulse->duration);
    } else {
      const auto& f = std::get<FreeSegment>(s);
      std::snprintf(buf, sizeof(buf), "FREE dwz=%.17g t=%.17g\n", f.delta_omega_z, f.t);
    }
    out += buf;
  }
  return out;
}

OperatorMatrix program_unitary(const PulseProgram& p, const TrapConfig& trap,
                               const HilbertSpace& space) {
  std::map<StepKey, Matrix> cache;
  Matrix u = Matrix::Identity(space.dim(), space.dim());
  for (const auto& s : p.steps) u = step_unitary(s, trap, space, cache) * u;
  return OperatorMatrix(space, Subsystem::joint, std::move(u), Flag::unknown, Flag::yes);
}

StateVector run_program(const PulseProgram& p, const TrapConfig& trap, StateVector psi,
                        double guard_tol) {
  std::map<StepKey, Matrix> cache;
  for (const auto& s : p.steps) {
    psi = StateVector(psi.space, step_unitary(s, trap, psi.space, cache) * psi.amps);
    auto guard = truncation_guard(psi, guard_tol);
    if (!guard.ok) throw TruncationError(guard.leaked);
  }
  // each step is unitary to machine precision; long programs accumulate
  // harmless eps-scale drift, so the end-of-program norm check is looser
  psi.check_normalized(1e-10);
  return psi;
}

OperatorExpr native_pulse_expr(const PulseSpec& spec, const TrapConfig& trap) {
  spec.validate(true);
  int al = std::abs(spec.l);
  double factorial = 1.0;
  for (int k = 2; k <= al; ++k) factorial *= k;
  cplx coeff = spec.omega * std::exp(cplx(0.0, spec.phi)) *
               std::pow(cplx(0.0, trap.eta()), al) / factorial;
  int p = spec.l >= 0 ? al : 0;
  int q = spec.l >= 0 ? 0 : al;
  if (spec.epsilon == 1)
    return OperatorExpr::single(SpinKind::sigma_plus, p, q, coeff * 0.5, true);
  return OperatorExpr::single(SpinKind::identity, p, q, coeff, true);
}

OperatorExpr free_segment_expr(const FreeSegment& seg) {
  return OperatorExpr::single(SpinKind::identity, 1, 1, seg.delta_omega_z);
}

// --- matrix-level diagnostics -------------------------------------------------

Matrix gadget_unitary(const Matrix& a, const Matrix& b, double delta_t) {
  Matrix ua = expm_hermitian(a, delta_t);
  Matrix ub = expm_hermitian(b, delta_t);
  return ua * ub * ua.adjoint() * ub.adjoint();
}

Matrix gadget_commutator_reference(const Matrix& a, const Matrix& b, double delta_t) {
  Matrix comm = a * b - b * a;  // anti-hermitian
  Matrix k = cplx(0.0, 1.0) * static_cast<double>(kGadgetSign) * comm * delta_t * delta_t;
  return expm_hermitian(k, 1.0);
}

Matrix motional_block(const Matrix& joint, const HilbertSpace& space) {
  int d = space.motional_dim();
  return joint.topLeftCorner(d, d);
}

std::vector<MonomialWeight> fit_motional_monomials(const Matrix& k_mot,
                                                   const HilbertSpace& space, int max_order,
                                                   int clip_n) {
  if (clip_n < 1 || clip_n >= space.motional_dim())
    throw std::invalid_argument("fit_motional_monomials: clip_n out of range");
  if (k_mot.rows() != space.motional_dim())
    throw std::invalid_argument("fit_motional_monomials: expected a motional-space matrix");
  int d = clip_n + 1;
  std::vector<MonomialWeight> basis;
  for (int p = 0; p <= max_order; ++p)
    for (int q = 0; p + q <= max_order; ++q) basis.push_back({p, q, 0.0});

  Matrix a(d * d, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    Matrix m = monomial_matrix(space, basis[j].p, basis[j].q).topLeftCorner(d, d);
    a.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(m.data(), d * d);
  }
  Matrix clipped = k_mot.topLeftCorner(d, d);
  Vector b = Eigen::Map<const Vector>(clipped.data(), d * d);
  Vector x = a.colPivHouseholderQr().solve(b);
  for (std::size_t j = 0; j < basis.size(); ++j)
    basis[j].coeff = x(static_cast<Eigen::Index>(j));
  return basis;
}

// --- compiler ------------------------------------------------------------------

struct PulseCompiler::Recipe {
  enum class Kind { skip, pulse, free_evolution, gadget };
  Kind kind = Kind::skip;
  int depth = 0;
  SpinKind spin = SpinKind::identity;
  int p = 0, q = 0;
  cplx coeff;  // canonical pattern coefficient to realize

  // gadget plan
  struct Operand {
    std::optional<PulseSpec> pulse;               // duration filled at emission
    std::optional<Pattern> nested;                // realized by inner synthesis per dt
  };
  Operand op_a, op_b;
  double rate = 0.0;          // |target-pattern coefficient| per dt^2
  double phase = 0.0;         // arg of the realized coefficient (= arg(coeff))
  std::vector<Pattern> cancels;  // byproducts per dt^2, cancelled each repetition
};

PulseCompiler::PulseCompiler(TrapConfig trap, HilbertSpace space, CompilerOptions opt)
    : trap_(std::move(trap)), space_(space), opt_(opt) {
  trap_.validate();
  if (!(opt_.omega_ref > 0.0))
    throw std::invalid_argument("PulseCompiler: omega_ref must be positive");
}

namespace {

// Native atom emission: appends a step realizing exp(-i * weight * (pattern + h.c.))
// for the dimensionless accumulated weight = coeff * tau. Returns false if the
// pattern is not a single native step.
bool emit_native_weight(SpinKind s, int p, int q, cplx weight, const TrapConfig& trap,
                        double omega_ref, std::vector<ProgramStep>& out) {
  if (s == SpinKind::identity && p == 0 && q == 0) return true;  // global phase, dropped
  if (std::abs(weight) < 1e-300) return true;
  double eta = trap.eta();
  if (s == SpinKind::identity && p == 1 && q == 1) {
    if (std::abs(weight.imag()) > 1e-9 * std::abs(weight))
      throw std::invalid_argument("number-operator coefficient must be real");
    double w = weight.real();
    out.push_back(FreeSegment{w > 0 ? omega_ref : -omega_ref, std::abs(w) / omega_ref});
    return true;
  }
  int eps, l;
  if (s == SpinKind::sigma_plus && q == 0 && p <= 3) {
    eps = 1;
    l = p;
  } else if (s == SpinKind::sigma_plus && p == 0 && q >= 1 && q <= 3) {
    eps = 1;
    l = -q;
  } else if (s == SpinKind::identity && q == 0 && p >= 1 && p <= 3) {
    eps = 0;
    l = p;
  } else {
    return false;
  }
  int al = std::abs(l);
  double factorial = 1.0;
  for (int k = 2; k <= al; ++k) factorial *= k;
  double base = omega_ref * std::pow(eta, al) / factorial;
  if (eps == 1) base *= 0.5;  // IR sigma_plus carries twice the elementary raising matrix
  double phi = std::arg(weight) - al * kPi / 2.0;
  double duration = std::abs(weight) / base;
  out.push_back(PulseSpec{eps, l, omega_ref, phi, duration});
  return true;
}

bool native_reachable(SpinKind s, int p, int q) {
  if (s == SpinKind::identity && p == 0 && q == 0) return true;
  if (s == SpinKind::identity && p == 1 && q == 1) return true;
  if (s == SpinKind::identity && q == 0 && p >= 1 && p <= 3) return true;
  if (s == SpinKind::sigma_plus && q == 0 && p <= 3) return true;
  if (s == SpinKind::sigma_plus && p == 0 && q >= 1 && q <= 3) return true;
  return false;
}

}  // namespace

PulseCompiler::Recipe PulseCompiler::plan_pattern(SpinKind spin, int p, int q, cplx coeff,
                                                  int max_depth, double delta_t) const {
  Recipe r;
  r.spin = spin;
  r.p = p;
  r.q = q;
  r.coeff = coeff;
  if (native_reachable(spin, p, q)) {
    if (spin == SpinKind::identity && p == 0 && q == 0)
      r.kind = Recipe::Kind::skip;
    else if (spin == SpinKind::identity && p == 1 && q == 1)
      r.kind = Recipe::Kind::free_evolution;
    else
      r.kind = Recipe::Kind::pulse;
    r.depth = 0;
    return r;
  }

  // Gadget rules. Each family has one free phase on operand B; the realized
  // pattern coefficient per dt^2 is affine in e^{+-i phi}, so two symbolic
  // evaluations determine the phase and rate exactly.
  struct Rule {
    int depth;
    std::function<Recipe::Operand(double phi)> op_a, op_b;
    std::function<OperatorExpr(double phi)> expr_a, expr_b;
  };
  std::optional<Rule> rule;
  double omega = opt_.omega_ref;
  const TrapConfig& trap = trap_;
  if (spin == SpinKind::sigma_z && p == 0 && q == 0) {
    Rule rl;
    rl.depth = 1;
    rl.op_a = [omega](double) { return Recipe::Operand{PulseSpec{1, 0, omega, 0.0, 0.0}, {}}; };
    rl.op_b = [omega](double phi) {
      return Recipe::Operand{PulseSpec{1, 0, omega, phi, 0.0}, {}};
    };
    rl.expr_a = [omega, &trap](double) {
      return native_pulse_expr(PulseSpec{1, 0, omega, 0.0, 0.0}, trap);
    };
    rl.expr_b = [omega, &trap](double phi) {
      return native_pulse_expr(PulseSpec{1, 0, omega, phi, 0.0}, trap);
    };
    rule = std::move(rl);
  } else if (spin == SpinKind::identity && p == 2 && q == 1) {
    // a^dag a^2 pair from [H_02, H_03]; linear byproduct cancelled by H_01.
    Rule rl;
    rl.depth = 1;
    rl.op_a = [omega](double) { return Recipe::Operand{PulseSpec{0, 2, omega, 0.0, 0.0}, {}}; };
    rl.op_b = [omega](double phi) {
      return Recipe::Operand{PulseSpec{0, 3, omega, phi, 0.0}, {}};
    };
    rl.expr_a = [omega, &trap](double) {
      return native_pulse_expr(PulseSpec{0, 2, omega, 0.0, 0.0}, trap);
    };
    rl.expr_b = [omega, &trap](double phi) {
      return native_pulse_expr(PulseSpec{0, 3, omega, phi, 0.0}, trap);
    };
    rule = std::move(rl);
  } else if (spin == SpinKind::identity && p == 2 && q == 2) {
    // Kerr term (a^dag)^2 a^2 from two cubic generators with orthogonal
    // phases; a^dag a byproduct cancelled by free evolution.
    double a_ref = omega * std::pow(trap_.eta(), 5) / 2.0;
    Rule rl;
    rl.depth = 2;
    rl.op_a = [a_ref](double) {
      return Recipe::Operand{{}, Pattern{SpinKind::identity, 2, 1, a_ref, false}};
    };
    rl.op_b = [a_ref](double phi) {
      return Recipe::Operand{
          {}, Pattern{SpinKind::identity, 2, 1, a_ref * std::exp(cplx(0.0, phi)), false}};
    };
    rl.expr_a = [a_ref](double) { return expand_pattern(SpinKind::identity, 2, 1, a_ref); };
    rl.expr_b = [a_ref](double phi) {
      return expand_pattern(SpinKind::identity, 2, 1, a_ref * std::exp(cplx(0.0, phi)));
    };
    rule = std::move(rl);
  }

  if (!rule)
    throw UnreachableTargetError(monomial_name(spin, p, q),
                                 "no native pulse or gadget rule reaches this monomial");
  if (rule->depth > max_depth)
    throw UnreachableTargetError(
        monomial_name(spin, p, q),
        "requires gadget nesting depth " + std::to_string(rule->depth) + " but max_depth is " +
            std::to_string(max_depth));
  if (!(delta_t > 0.0))
    throw std::invalid_argument("gadget synthesis requires a positive delta_t");

  auto coeff_at = [&](double phi) {
    OperatorExpr k = cplx(0.0, -1.0) * commutator(rule->expr_a(phi), rule->expr_b(phi));
    for (const auto& pat : canonical_patterns(k.materialized()))
      if (pat.spin == spin && pat.p == p && pat.q == q) return pat.coeff;
    return cplx(0.0);
  };
  cplx c0 = coeff_at(0.0);
  cplx c90 = coeff_at(kPi / 2.0);
  cplx u = 0.5 * (c0 - cplx(0.0, 1.0) * c90);
  cplx v = 0.5 * (c0 + cplx(0.0, 1.0) * c90);
  double theta = std::arg(coeff);
  cplx up = u * std::exp(cplx(0.0, -theta));
  cplx vp = v * std::exp(cplx(0.0, -theta));
  auto realized = [&](double phi) {
    return (u * std::exp(cplx(0.0, phi)) + v * std::exp(cplx(0.0, -phi))) *
           std::exp(cplx(0.0, -theta));
  };
  // Im(e^{-i theta} coeff(phi)) = A sin(phi) + B cos(phi). When that vanishes
  // identically (the coefficient is real at every phase, as for the carrier
  // pair), maximize the real part P cos(phi) + Q sin(phi) instead.
  double a_coef = up.real() - vp.real();
  double b_coef = up.imag() + vp.imag();
  double best_phi, best_rate;
  if (std::hypot(a_coef, b_coef) < 1e-12 * (std::abs(u) + std::abs(v))) {
    double p_coef = up.real() + vp.real();
    double q_coef = vp.imag() - up.imag();
    best_phi = std::atan2(q_coef, p_coef);
    best_rate = realized(best_phi).real();
  } else {
    double phi_root = std::atan2(-b_coef, a_coef);
    best_phi = phi_root;
    best_rate = realized(phi_root).real();
    if (realized(phi_root + kPi).real() > best_rate) {
      best_phi = phi_root + kPi;
      best_rate = realized(best_phi).real();
    }
  }
  if (!(best_rate > 0.0))
    throw UnreachableTargetError(monomial_name(spin, p, q),
                                 "gadget rule produced a vanishing rate");
  cplx got = realized(best_phi);
  if (std::abs(got.imag()) > 1e-9 * std::abs(got))
    throw std::runtime_error("gadget phase solve failed to align the target coefficient");

  r.kind = Recipe::Kind::gadget;
  r.depth = rule->depth;
  r.op_a = rule->op_a(best_phi);
  r.op_b = rule->op_b(best_phi);
  r.rate = best_rate;
  r.phase = theta;

  // Byproducts: everything in the per-dt^2 generator besides the target term.
  OperatorExpr k_star =
      cplx(0.0, -1.0) * commutator(rule->expr_a(best_phi), rule->expr_b(best_phi));
  OperatorExpr residual =
      k_star - expand_pattern(spin, p, q, best_rate * std::exp(cplx(0.0, theta)));
  for (const auto& pat : canonical_patterns(residual.materialized())) {
    if (!native_reachable(pat.spin, pat.p, pat.q))
      throw UnreachableTargetError(monomial_name(pat.spin, pat.p, pat.q),
                                   "gadget byproduct is not natively cancellable");
    r.cancels.push_back(pat);
  }
  return r;
}

void PulseCompiler::emit_pattern(const Recipe& r, double tau, double delta_t_max,
                                 std::vector<ProgramStep>& out, int* depth_seen) const {
  *depth_seen = std::max(*depth_seen, r.depth);
  if (r.kind == Recipe::Kind::skip || tau <= 0.0 || std::abs(r.coeff) < 1e-300) return;
  if (r.kind == Recipe::Kind::pulse || r.kind == Recipe::Kind::free_evolution) {
    if (!emit_native_weight(r.spin, r.p, r.q, r.coeff * tau, trap_, opt_.omega_ref, out))
      throw std::logic_error("native emission failed for a planned atom");
    return;
  }

  // Gadget: R repetitions at dt = sqrt(|c| tau / (R rate)) <= delta_t_max.
  double need = std::abs(r.coeff) * tau;
  auto reps = static_cast<long long>(std::ceil(need / (r.rate * delta_t_max * delta_t_max) - 1e-12));
  reps = std::max<long long>(reps, 1);
  double dt = std::sqrt(need / (static_cast<double>(reps) * r.rate));

  // Operand segment for signed time +-dt (identical across repetitions).
  auto operand_steps = [&](const Recipe::Operand& op, bool negative) {
    std::vector<ProgramStep> seg;
    if (op.pulse) {
      PulseSpec ps = *op.pulse;
      ps.duration = dt;
      if (negative) ps.phi += kPi;
      seg.push_back(ps);
    } else if (op.nested) {
      double dt_inner = 0.5 * dt * std::sqrt(opt_.omega_ref * dt);
      dt_inner = std::min(dt_inner, dt);
      OperatorExpr target = expand_pattern(op.nested->spin, op.nested->p, op.nested->q,
                                           op.nested->coeff);
      PulseProgram inner = synthesize(target, dt, dt_inner, r.depth - 1).first;
      if (negative) inner = negated(inner);
      seg = inner.steps;
    } else {
      throw std::logic_error("gadget operand has no realization");
    }
    return seg;
  };
  // Time order; the operator product is U_A(dt) U_B(dt) U_A(-dt) U_B(-dt).
  std::vector<ProgramStep> rep;
  for (const auto& s : operand_steps(r.op_b, true)) rep.push_back(s);
  for (const auto& s : operand_steps(r.op_a, true)) rep.push_back(s);
  for (const auto& s : operand_steps(r.op_b, false)) rep.push_back(s);
  for (const auto& s : operand_steps(r.op_a, false)) rep.push_back(s);
  for (const auto& c : r.cancels) {
    if (!emit_native_weight(c.spin, c.p, c.q, -c.coeff * dt * dt, trap_, opt_.omega_ref, rep))
      throw std::logic_error("byproduct cancellation emission failed");
  }
  for (long long i = 0; i < reps; ++i)
    out.insert(out.end(), rep.begin(), rep.end());
}

PulseProgram PulseCompiler::commutator_gadget(const GadgetOperand& a, const GadgetOperand& b,
                                              double delta_t) const {
  if (!(delta_t > 0.0))
    throw std::invalid_argument("commutator_gadget: delta_t must be positive");
  auto segment = [&](const GadgetOperand& op, bool negative) {
    std::vector<ProgramStep> seg;
    if (const auto* p = std::get_if<PulseSpec>(&op)) {
      PulseSpec ps = *p;
      ps.validate(true);
      ps.duration = delta_t;
      if (negative) ps.phi += kPi;
      seg.push_back(ps);
    } else if (const auto* f = std::get_if<FreeSegment>(&op)) {
      FreeSegment fs = *f;
      fs.t = delta_t;
      if (negative) fs.delta_omega_z = -fs.delta_omega_z;
      seg.push_back(fs);
    } else if (const auto* e = std::get_if<OperatorExpr>(&op)) {
      PulseProgram pr = synthesize(*e, delta_t, delta_t / 4.0, 2).first;
      if (negative) pr = negated(pr);
      seg = pr.steps;
    } else {
      PulseProgram pr = std::get<PulseProgram>(op);
      if (negative) pr = negated(pr);
      seg = pr.steps;
    }
    return seg;
  };
  PulseProgram out;
  out.delta_t = delta_t;
  out.depth = 1;
  out.target_desc = "commutator gadget";
  for (const auto& s : segment(b, true)) out.steps.push_back(s);
  for (const auto& s : segment(a, true)) out.steps.push_back(s);
  for (const auto& s : segment(b, false)) out.steps.push_back(s);
  for (const auto& s : segment(a, false)) out.steps.push_back(s);
  return out;
}

PulseProgram PulseCompiler::trotter(const std::vector<TrotterTarget>& targets,
                                    double total_time, int k, double delta_t,
                                    int max_depth) const {
  if (k < 1) throw std::invalid_argument("trotter: k must be >= 1");
  if (total_time < 0.0) throw std::invalid_argument("trotter: total_time must be >= 0");
  double tau = total_time / k;

  struct Planned {
    std::vector<Recipe> recipes;            // for expression targets
    std::optional<PulseSpec> pulse;         // generator pulse; duration = tau
    std::optional<PulseProgram> program;    // replayed per slice
  };
  std::vector<Planned> plans;
  int depth = 0;
  for (const auto& t : targets) {
    Planned pl;
    if (const auto* e = std::get_if<OperatorExpr>(&t)) {
      OperatorExpr m = e->materialized();
      if (!m.is_hermitian())
        throw std::invalid_argument("trotter: expression target must be hermitian");
      for (const auto& pat : canonical_patterns(m))
        pl.recipes.push_back(plan_pattern(pat.spin, pat.p, pat.q, pat.coeff, max_depth, delta_t));
    } else if (const auto* ps = std::get_if<PulseSpec>(&t)) {
      PulseSpec v = *ps;
      v.validate(true);
      pl.pulse = v;
    } else {
      pl.program = std::get<PulseProgram>(t);
      depth = std::max(depth, pl.program->depth);
    }
    plans.push_back(std::move(pl));
  }

  PulseProgram out;
  out.delta_t = delta_t;
  out.target_desc = "trotter split, k=" + std::to_string(k);
  for (int slice = 0; slice < k; ++slice) {
    for (const auto& pl : plans) {
      if (pl.pulse) {
        PulseSpec ps = *pl.pulse;
        ps.duration = tau;
        out.steps.push_back(ps);
      } else if (pl.program) {
        out.steps.insert(out.steps.end(), pl.program->steps.begin(), pl.program->steps.end());
      } else {
        for (const auto& r : pl.recipes) emit_pattern(r, tau, delta_t, out.steps, &depth);
      }
    }
  }
  out.depth = depth;
  return out;
}

std::pair<PulseProgram, CompileReport> PulseCompiler::synthesize(const OperatorExpr& target,
                                                                 double time, double delta_t,
                                                                 int max_depth) const {
  if (max_depth < 1) throw std::invalid_argument("synthesize: max_depth must be >= 1");
  if (!(delta_t > 0.0)) throw std::invalid_argument("synthesize: delta_t must be positive");
  if (time < 0.0) throw std::invalid_argument("synthesize: time must be >= 0");
  OperatorExpr m = target.materialized();
  if (!m.is_hermitian())
    throw std::invalid_argument("synthesize: target expression must be hermitian");
  if (space_.n_max < m.max_order() + 2)
    throw std::invalid_argument("synthesize: space too small for the target order");

  auto patterns = canonical_patterns(m);
  std::vector<Recipe> recipes;
  for (const auto& pat : patterns)
    recipes.push_back(plan_pattern(pat.spin, pat.p, pat.q, pat.coeff, max_depth, delta_t));

  // Single-group targets evolve in one shot; sums are first-order split into
  // slices no longer than delta_t.
  int k = 1;
  if (recipes.size() > 1 && time > delta_t)
    k = static_cast<int>(std::ceil(time / delta_t));

  PulseProgram program;
  program.delta_t = delta_t;
  program.target_desc = "synthesized target, " + std::to_string(patterns.size()) + " term(s)";
  int depth = 0;
  double tau = time / k;
  for (int slice = 0; slice < k; ++slice)
    for (const auto& r : recipes) emit_pattern(r, tau, delta_t, program.steps, &depth);
  program.depth = depth;

  CompileReport report = verify(program, target, time);
  return {std::move(program), report};
}

CompileReport PulseCompiler::verify(const PulseProgram& program, const OperatorExpr& target,
                                    double time) const {
  OperatorExpr m = target.materialized();
  if (!m.is_hermitian())
    throw std::invalid_argument("verify: target expression must be hermitian");
  OperatorMatrix href = expr_to_matrix(m, space_);
  Matrix uref = expm_hermitian(href.m, time);
  Matrix uprog = program_unitary(program, trap_, space_).m;

  // Guard: a low-lying probe state must not climb into the top of the space.
  {
    Vector probe = Vector::Zero(space_.dim());
    int nprobe = std::min(2, space_.n_max - 2);
    for (int s = 0; s <= 1; ++s)
      for (int n = 0; n <= nprobe; ++n) probe(space_.index(s, n)) = 1.0;
    probe.normalize();
    run_program(program, trap_, StateVector(space_, probe), opt_.guard_tol);
  }

  CompileReport rep;
  rep.step_count = program.step_count();
  rep.depth = program.depth;
  rep.delta_t = program.delta_t;
  rep.full_space_error = phase_aligned_distance(uprog, uref);

  int margin = std::min(opt_.confinement_margin, space_.n_max - 1);
  int n_keep = space_.n_max - margin;
  std::vector<int> cols;
  for (int s = 0; s <= 1; ++s)
    for (int n = 0; n <= n_keep; ++n) cols.push_back(space_.index(s, n));
  Matrix up(space_.dim(), cols.size());
  Matrix ur(space_.dim(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    up.col(j) = uprog.col(cols[j]);
    ur.col(j) = uref.col(cols[j]);
  }
  cplx tr = (ur.adjoint() * up).trace();
  cplx phase = std::abs(tr) > 0 ? tr / std::abs(tr) : cplx(1.0);
  rep.measured_error = spectral_norm(up - phase * ur);
  return rep;
}

}  // namespace ionsim
