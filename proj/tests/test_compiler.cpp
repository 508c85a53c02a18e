#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "ionsim/compiler.hpp"
#include "oracles.hpp"

using namespace ionsim;
constexpr double kPi = std::numbers::pi;

namespace {

TrapConfig unit_trap() {
  TrapConfig t = TrapConfig::paper();
  return t;  // eta 0.35; omega scales are dimensionless (omega_ref = 1)
}

PulseCompiler make_compiler(int n_max, double omega_ref = 1.0) {
  CompilerOptions opt;
  opt.omega_ref = omega_ref;
  return PulseCompiler(unit_trap(), HilbertSpace(n_max), opt);
}

}  // namespace

TEST_CASE("gadget sign calibration pins kGadgetSign = -1") {
  // Carrier pair: A = Omega sigma_x, B(phi=-pi/2) = Omega sigma_y; [A,B] is
  // known analytically, so the gadget product discriminates the sign.
  HilbertSpace s(3);
  TrapConfig trap = unit_trap();
  Matrix a = native_hamiltonian(PulseSpec{1, 0, 1.0, 0.0, 0.0}, trap, s).m;
  Matrix b = native_hamiltonian(PulseSpec{1, 0, 1.0, -kPi / 2.0, 0.0}, trap, s).m;
  double dt = 1e-3;  // BCH remainder ~ dt^3 while the sign mismatch is ~ dt^2
  Matrix u = gadget_unitary(a, b, dt);
  Matrix ref_with_sign = gadget_commutator_reference(a, b, dt);
  Matrix comm = a * b - b * a;
  Matrix wrong_sign_exp =
      oracle::expm_minus_i(cplx(0, 1) * static_cast<double>(-kGadgetSign) * comm * dt * dt, 1.0);
  double good = spectral_norm(u - ref_with_sign);
  double bad = spectral_norm(u - wrong_sign_exp);
  CHECK(good < 1e-2 * bad);
  CHECK(kGadgetSign == -1);
}

TEST_CASE("expression operands are compiled into the gadget") {
  auto compiler = make_compiler(8);
  HilbertSpace s = compiler.space();
  TrapConfig trap = compiler.trap();
  double dt = 5e-3;
  // expression forms of the two carriers reproduce the pulse-operand gadget
  OperatorExpr ca = native_pulse_expr(PulseSpec{1, 0, 1.0, 0.0, 0.0}, trap);
  OperatorExpr cb = native_pulse_expr(PulseSpec{1, 0, 1.0, kPi / 2.0, 0.0}, trap);
  PulseProgram from_exprs = compiler.commutator_gadget(ca, cb, dt);
  PulseProgram from_pulses = compiler.commutator_gadget(PulseSpec{1, 0, 1.0, 0.0, 0.0},
                                                        PulseSpec{1, 0, 1.0, kPi / 2.0, 0.0}, dt);
  Matrix u1 = program_unitary(from_exprs, trap, s).m;
  Matrix u2 = program_unitary(from_pulses, trap, s).m;
  CHECK(phase_aligned_distance(u1, u2) < 1e-10);
}

TEST_CASE("self-commutator gadget composes to the identity") {
  auto compiler = make_compiler(8);
  PulseSpec a{0, 2, 1.0, 0.3, 0.0};
  double dt = 1e-3;  // ||A|| is O(1) in these units
  PulseProgram prog = compiler.commutator_gadget(a, a, dt);
  CHECK(prog.step_count() == 4);
  Matrix u = program_unitary(prog, compiler.trap(), compiler.space()).m;
  CHECK(spectral_norm(u - Matrix::Identity(u.rows(), u.cols())) < 1e-9);
}

TEST_CASE("carrier-pair gadget approximates a sigma_z rotation at third order") {
  HilbertSpace s(3);
  TrapConfig trap = unit_trap();
  Matrix a = native_hamiltonian(PulseSpec{1, 0, 1.0, 0.0, 0.0}, trap, s).m;
  Matrix b = native_hamiltonian(PulseSpec{1, 0, 1.0, kPi / 2.0, 0.0}, trap, s).m;
  double e1 = spectral_norm(gadget_unitary(a, b, 0.02) -
                            gadget_commutator_reference(a, b, 0.02));
  double e2 = spectral_norm(gadget_unitary(a, b, 0.01) -
                            gadget_commutator_reference(a, b, 0.01));
  double ratio = e1 / e2;
  CHECK(ratio > 8.0 * 0.8);
  CHECK(ratio < 8.0 * 1.2);
}

TEST_CASE("gadget error order is dt^3 for non-commuting native pairs") {
  HilbertSpace s(12);
  TrapConfig trap = unit_trap();
  auto ham = [&](int eps, int l, double phi) {
    return native_hamiltonian(PulseSpec{eps, l, 1.0, phi, 0.0}, trap, s).m;
  };
  std::vector<std::pair<Matrix, Matrix>> pairs = {
      {ham(1, 0, 0.0), ham(1, 0, kPi / 2.0)},
      {ham(0, 2, 0.0), ham(0, 3, 0.0)},
      {ham(1, 1, 0.0), ham(1, 2, 0.7)},
  };
  for (const auto& [a, b] : pairs) {
    std::vector<double> dts, errs;
    for (double dt = 0.5; dt > 0.5e-2; dt *= 0.6) {
      dts.push_back(dt);
      errs.push_back(spectral_norm(gadget_unitary(a, b, dt) -
                                   gadget_commutator_reference(a, b, dt)));
    }
    double slope = oracle::loglog_slope(dts, errs);
    CHECK(slope > 2.8);
    CHECK(slope < 3.2);
  }
}

TEST_CASE("H02/H03 gadget generator carries its non-native weight on the cubic pair") {
  // Extract the effective generator per dt^2 at motional dim 16, fit monomials
  // on the block n <= 8, and compare against the symbolic commutator.
  HilbertSpace s(15);
  TrapConfig trap = unit_trap();
  Matrix a = motional_block(native_hamiltonian(PulseSpec{0, 2, 1.0, 0.0, 0.0}, trap, s).m, s);
  Matrix b = motional_block(native_hamiltonian(PulseSpec{0, 3, 1.0, 0.0, 0.0}, trap, s).m, s);

  auto generator_per_dt2 = [&](double dt) {
    Matrix k = principal_generator(gadget_unitary(a, b, dt));
    return Matrix((k / (dt * dt)).eval());
  };
  // Richardson step kills the O(dt) remainder of K/dt^2.
  double dt = 2e-2;
  Matrix f1 = generator_per_dt2(dt);
  Matrix f2 = generator_per_dt2(dt / 2.0);
  Matrix k = 2.0 * f2 - f1;

  auto weights = fit_motional_monomials(k, s, 4, 8);
  OperatorExpr sym = cplx(0, -1) * commutator(
      native_pulse_expr(PulseSpec{0, 2, 1.0, 0.0, 0.0}, trap),
      native_pulse_expr(PulseSpec{0, 3, 1.0, 0.0, 0.0}, trap));

  double cubic_weight = 0.0, largest_other_nonnative = 0.0;
  for (const auto& w : weights) {
    bool native = (w.p == 0 || w.q == 0 || (w.p == 1 && w.q == 1)) &&
                  (std::max(w.p, w.q) <= 3);
    bool cubic = (w.p == 2 && w.q == 1) || (w.p == 1 && w.q == 2);
    if (cubic) {
      cubic_weight = std::max(cubic_weight, std::abs(w.coeff));
      cplx expect = sym.coefficient(SpinKind::identity, w.p, w.q);
      CHECK(std::abs(w.coeff - expect) < 1e-4 * std::abs(expect));
    } else if (!native) {
      largest_other_nonnative = std::max(largest_other_nonnative, std::abs(w.coeff));
    }
  }
  CHECK(cubic_weight > 0.0);
  CHECK(largest_other_nonnative < 1e-3 * cubic_weight);
}

TEST_CASE("trotter") {
  auto compiler = make_compiler(6);
  HilbertSpace s = compiler.space();
  TrapConfig trap = compiler.trap();

  SUBCASE("single target equals direct evolution for any k") {
    PulseSpec carrier{1, 0, 1.0, 0.4, 0.0};
    Matrix h = native_hamiltonian(carrier, trap, s).m;
    double t = 1.3;
    for (int k : {1, 5}) {
      PulseProgram prog = compiler.trotter({TrotterTarget(carrier)}, t, k);
      Matrix u = program_unitary(prog, trap, s).m;
      CHECK(spectral_norm(u - oracle::expm_minus_i(h, t)) < 1e-12);
    }
  }
  SUBCASE("commuting targets split exactly") {
    PulseSpec carrier{1, 0, 1.0, 0.0, 0.0};  // sigma_x (x) I
    FreeSegment number{0.8, 0.0};            // I (x) adag a
    Matrix h = native_hamiltonian(carrier, trap, s).m +
               0.8 * kron(Matrix::Identity(2, 2), number_op(s).m);
    for (int k : {1, 3}) {
      PulseProgram prog = compiler.trotter(
          {TrotterTarget(carrier), TrotterTarget(OperatorExpr::single(SpinKind::identity, 1,
                                                                      1, 0.8))},
          2.0, k);
      (void)number;
      Matrix u = program_unitary(prog, trap, s).m;
      CHECK(phase_aligned_distance(u, oracle::expm_minus_i(h, 2.0)) < 1e-10);
    }
  }
  SUBCASE("first-order splitting error falls off as 1/k") {
    PulseSpec ca{1, 0, 1.0, 0.0, 0.0};
    PulseSpec cb{1, 0, 1.0, kPi / 2.0, 0.0};
    Matrix h = native_hamiltonian(ca, trap, s).m + native_hamiltonian(cb, trap, s).m;
    double t = 1.0;
    Matrix exact = oracle::expm_minus_i(h, t);
    std::vector<double> ks, errs;
    for (int k : {4, 8, 16, 32, 64}) {
      PulseProgram prog = compiler.trotter({TrotterTarget(ca), TrotterTarget(cb)}, t, k);
      Matrix u = program_unitary(prog, trap, s).m;
      ks.push_back(1.0 / k);
      errs.push_back(spectral_norm(u - exact));
    }
    double slope = oracle::loglog_slope(ks, errs);
    CHECK(slope > 0.85);
    CHECK(slope < 1.15);
  }
}

TEST_CASE("synthesize native targets") {
  auto compiler = make_compiler(8);

  SUBCASE("pure carrier term becomes a single pulse") {
    OperatorExpr target = OperatorExpr::single(SpinKind::sigma_plus, 0, 0, 0.35, true);
    auto [prog, rep] = compiler.synthesize(target, 2.0, 0.1, 1);
    CHECK(prog.step_count() == 1);
    CHECK(rep.measured_error < 1e-10);
    CHECK(rep.full_space_error < 1e-10);
  }
  SUBCASE("red-coupling structure maps to one negative-order pulse") {
    OperatorExpr target = OperatorExpr::single(SpinKind::sigma_plus, 0, 1, cplx(0.2, 0.1), true);
    auto [prog, rep] = compiler.synthesize(target, 1.0, 0.1, 1);
    REQUIRE(prog.step_count() == 1);
    const auto& pulse = std::get<PulseSpec>(prog.steps[0]);
    CHECK(pulse.epsilon == 1);
    CHECK(pulse.l == -1);
    CHECK(rep.measured_error < 1e-10);
  }
  SUBCASE("number operator becomes free evolution") {
    OperatorExpr target = OperatorExpr::single(SpinKind::identity, 1, 1, -0.7);
    auto [prog, rep] = compiler.synthesize(target, 1.5, 0.1, 1);
    REQUIRE(prog.step_count() == 1);
    CHECK(std::holds_alternative<FreeSegment>(prog.steps[0]));
    CHECK(rep.measured_error < 1e-12);
  }
  SUBCASE("squeeze pair with phase") {
    // a real squeeze spreads population upward, so give the guard headroom
    auto wide = make_compiler(14);
    OperatorExpr target =
        OperatorExpr::single(SpinKind::identity, 2, 0, 0.02 * std::exp(cplx(0, 1.1)), true);
    auto [prog, rep] = wide.synthesize(target, 1.0, 0.1, 1);
    CHECK(prog.step_count() == 1);
    CHECK(rep.measured_error < 1e-10);
  }
}

TEST_CASE("synthesize sigma_z via the carrier gadget") {
  // accumulated gadget error scales as Omega dt; halving dt must halve it
  auto compiler = make_compiler(5);
  for (double c : {0.22, -0.4}) {
    OperatorExpr target = OperatorExpr::single(SpinKind::sigma_z, 0, 0, c);
    double prev = 0.0;
    for (double dt : {0.05, 0.025, 0.0125}) {
      auto [prog, rep] = compiler.synthesize(target, 1.0, dt, 1);
      CHECK(rep.measured_error < 0.06);
      if (prev > 0.0) CHECK(rep.measured_error < 0.65 * prev);
      prev = rep.measured_error;
    }
    CHECK(prev < 0.01);
  }
}

TEST_CASE("synthesize the cubic generator with first-order convergence") {
  auto compiler = make_compiler(9);
  double rate = std::pow(0.35, 5) / 2.0;
  OperatorExpr target =
      OperatorExpr::single(SpinKind::identity, 2, 1, 0.05 * rate * std::exp(cplx(0, 0.4)), true);
  double time = 1.0;
  std::vector<double> dts, errs;
  for (double dt : {0.04, 0.02, 0.01}) {
    auto [prog, rep] = compiler.synthesize(target, time, dt, 1);
    CHECK(rep.depth == 1);
    dts.push_back(dt);
    errs.push_back(rep.measured_error);
  }
  double slope = oracle::loglog_slope(dts, errs);
  CHECK(slope > 0.9);
  // full-space distance carries the dt-independent Fock-cutoff artifact and
  // must NOT be expected to converge; the confined metric is the meaningful one
  auto [prog, rep] = compiler.synthesize(target, time, 0.01, 1);
  CHECK(rep.full_space_error > rep.measured_error);
}

TEST_CASE("synthesize the Kerr term through nested gadgets") {
  auto compiler = make_compiler(10);
  // size the coefficient so the coarser ladder point already needs several
  // gadget repetitions (otherwise both points collapse onto one program)
  double a_ref = std::pow(0.35, 5) / 2.0;
  double kerr_rate = 6.0 * a_ref * a_ref;
  OperatorExpr target =
      OperatorExpr::single(SpinKind::identity, 2, 2, 5.0 * kerr_rate * 0.35 * 0.35);
  auto [p1, r1] = compiler.synthesize(target, 1.0, 0.35, 2);
  auto [p2, r2] = compiler.synthesize(target, 1.0, 0.175, 2);
  CHECK(p1.depth == 2);
  CHECK(p2.step_count() > p1.step_count());
  CHECK(r2.measured_error < 0.7 * r1.measured_error);
  CHECK_THROWS_AS(compiler.synthesize(target, 1.0, 0.35, 1), UnreachableTargetError);
}

TEST_CASE("unreachable targets name the offending monomial") {
  auto compiler = make_compiler(9);
  SUBCASE("order five") {
    OperatorExpr target = OperatorExpr::single(SpinKind::identity, 5, 0, 0.1, true);
    try {
      compiler.synthesize(target, 1.0, 0.1, 1);
      FAIL("expected UnreachableTargetError");
    } catch (const UnreachableTargetError& e) {
      CHECK(e.monomial.find("(a^dag)^5") != std::string::npos);
    }
  }
  SUBCASE("sigma_z times motion") {
    OperatorExpr target = OperatorExpr::single(SpinKind::sigma_z, 1, 1, 0.1);
    CHECK_THROWS_AS(compiler.synthesize(target, 1.0, 0.1, 3), UnreachableTargetError);
  }
  SUBCASE("non-hermitian target is a contract violation, not unreachable") {
    OperatorExpr target = OperatorExpr::single(SpinKind::sigma_plus, 1, 0, 0.1);
    CHECK_THROWS_AS(compiler.synthesize(target, 1.0, 0.1, 2), std::invalid_argument);
  }
}

TEST_CASE("verify") {
  auto compiler = make_compiler(8);
  SUBCASE("empty program against the zero target") {
    CompileReport rep = compiler.verify(PulseProgram{}, OperatorExpr::zero(), 3.0);
    CHECK(rep.measured_error < 1e-14);
    CHECK(rep.full_space_error < 1e-14);
  }
  SUBCASE("a corrupted pulse raises the error by more than 10x") {
    OperatorExpr target = OperatorExpr::single(SpinKind::sigma_plus, 1, 0, 0.3, true);
    auto [prog, rep] = compiler.synthesize(target, 1.0, 0.1, 1);
    PulseProgram bad = prog;
    std::get<PulseSpec>(bad.steps[0]).phi += kPi;
    CompileReport bad_rep = compiler.verify(bad, target, 1.0);
    CHECK(bad_rep.measured_error > 10.0 * std::max(rep.measured_error, 1e-12));
  }
  SUBCASE("truncation violation mid-program is escalated") {
    // A long third-order drive walks the probe straight into the cutoff.
    auto small = make_compiler(5);
    PulseProgram prog;
    prog.steps.push_back(PulseSpec{0, 3, 1.0, 0.0, 40.0});
    OperatorExpr target = OperatorExpr::single(SpinKind::identity, 3, 0,
                                               native_pulse_expr(PulseSpec{0, 3, 1.0, 0.0, 0.0},
                                                                 small.trap())
                                                   .coefficient(SpinKind::identity, 3, 0));
    target.hermitize = true;
    CHECK_THROWS_AS(small.verify(prog, target, 40.0), TruncationError);
  }
}

TEST_CASE("programs are deterministic and negation inverts them") {
  auto compiler = make_compiler(9);
  double rate = std::pow(0.35, 5) / 2.0;
  OperatorExpr target =
      OperatorExpr::single(SpinKind::identity, 2, 1, 0.03 * rate * std::exp(cplx(0, 2.2)), true);
  auto [p1, r1] = compiler.synthesize(target, 1.0, 0.03, 1);
  auto [p2, r2] = compiler.synthesize(target, 1.0, 0.03, 1);
  CHECK(format_program_text(p1) == format_program_text(p2));

  Matrix u = program_unitary(p1, compiler.trap(), compiler.space()).m;
  Matrix uneg = program_unitary(negated(p1), compiler.trap(), compiler.space()).m;
  CHECK(max_abs(uneg - u.adjoint()) < 1e-11);
}

TEST_CASE("program text format") {
  PulseProgram p;
  p.steps.push_back(PulseSpec{1, -2, 2.5, 0.75, 1e-6});
  p.steps.push_back(FreeSegment{-3.25, 0.5});
  std::string text = format_program_text(p);
  CHECK(text == "PULSE eps=1 l=-2 omega=2.5 phi=0.75 t=9.9999999999999995e-07\n"
                "FREE dwz=-3.25 t=0.5\n");
}
