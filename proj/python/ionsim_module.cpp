// Python bindings for the main simulator operations.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ionsim/compiler.hpp"
#include "ionsim/expr.hpp"
#include "ionsim/interferometer.hpp"
#include "ionsim/io.hpp"
#include "ionsim/noise.hpp"

namespace py = pybind11;
using namespace ionsim;

namespace {

StateVector state_from_numpy(const HilbertSpace& space, const Vector& amps) {
  return StateVector::from_amplitudes(space, amps);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trapped-ion spin-oscillator simulator: native pulses, Hamiltonian "
            "compilation, nonlinear interferometry and Allan-variance metrology";

  py::register_exception<TruncationError>(m, "TruncationError");
  py::register_exception<UnreachableTargetError>(m, "UnreachableTargetError");

  py::class_<HilbertSpace>(m, "HilbertSpace")
      .def(py::init<int>(), py::arg("n_max"))
      .def_readonly("n_max", &HilbertSpace::n_max)
      .def_property_readonly("dim", &HilbertSpace::dim)
      .def_property_readonly("motional_dim", &HilbertSpace::motional_dim)
      .def("index", &HilbertSpace::index, py::arg("spin"), py::arg("n"));

  py::class_<TrapConfig>(m, "TrapConfig")
      .def(py::init<>())
      .def_static("paper", &TrapConfig::paper)
      .def_readwrite("omega_z", &TrapConfig::omega_z)
      .def_readwrite("omega_0", &TrapConfig::omega_0)
      .def_readwrite("mass", &TrapConfig::mass)
      .def_readwrite("delta_k", &TrapConfig::delta_k)
      .def_readwrite("eta_override", &TrapConfig::eta_override)
      .def("eta", &TrapConfig::eta)
      .def("z0", &TrapConfig::z0);

  py::class_<PulseSpec>(m, "PulseSpec")
      .def(py::init([](int epsilon, int l, double omega, double phi, double duration) {
             return PulseSpec{epsilon, l, omega, phi, duration};
           }),
           py::arg("epsilon"), py::arg("l"), py::arg("omega"), py::arg("phi") = 0.0,
           py::arg("duration") = 0.0)
      .def_readwrite("epsilon", &PulseSpec::epsilon)
      .def_readwrite("l", &PulseSpec::l)
      .def_readwrite("omega", &PulseSpec::omega)
      .def_readwrite("phi", &PulseSpec::phi)
      .def_readwrite("duration", &PulseSpec::duration);

  m.def("lowering_op", [](const HilbertSpace& s) { return lowering_op(s).m; }, py::arg("space"));
  m.def("raising_op", [](const HilbertSpace& s) { return raising_op(s).m; }, py::arg("space"));
  m.def("number_op", [](const HilbertSpace& s) { return number_op(s).m; }, py::arg("space"));
  m.def("native_hamiltonian",
        [](const PulseSpec& spec, const TrapConfig& trap, const HilbertSpace& space) {
          return native_hamiltonian(spec, trap, space).m;
        },
        py::arg("spec"), py::arg("trap"), py::arg("space"));
  m.def("pulse_unitary",
        [](const PulseSpec& spec, const TrapConfig& trap, const HilbertSpace& space) {
          return pulse_unitary(spec, trap, space).m;
        },
        py::arg("spec"), py::arg("trap"), py::arg("space"));
  m.def("rabi_frequency", &rabi_frequency, py::arg("spec"), py::arg("trap"), py::arg("n"));
  m.def("pi_over_2_duration", &pi_over_2_duration, py::arg("spec"), py::arg("trap"));
  m.def("evolve",
        [](const Matrix& h, double t, const HilbertSpace& space, const Vector& psi) {
          OperatorMatrix op(space, Subsystem::joint, h, Flag::unknown, Flag::unknown);
          return evolve(op, t, state_from_numpy(space, psi)).amps;
        },
        py::arg("hamiltonian"), py::arg("t"), py::arg("space"), py::arg("psi"));
  m.def("truncation_guard",
        [](const HilbertSpace& space, const Vector& psi, double tol) {
          auto rep = truncation_guard(state_from_numpy(space, psi), tol);
          return py::make_tuple(rep.ok, rep.leaked);
        },
        py::arg("space"), py::arg("psi"), py::arg("tol") = kTruncationTol);
  m.def("lamb_dicke_check",
        [](const HilbertSpace& space, const Vector& psi, const TrapConfig& trap) {
          auto rep = lamb_dicke_check(state_from_numpy(space, psi), trap);
          return py::make_tuple(rep.value, rep.ok);
        },
        py::arg("space"), py::arg("psi"), py::arg("trap"));

  py::class_<InterferometerConfig>(m, "InterferometerConfig")
      .def(py::init<>())
      .def_static("defaults", &InterferometerConfig::defaults, py::arg("order"))
      .def_readwrite("order", &InterferometerConfig::order)
      .def_readwrite("trap", &InterferometerConfig::trap)
      .def_readwrite("omega_pulse", &InterferometerConfig::omega_pulse)
      .def_readwrite("phi1", &InterferometerConfig::phi1)
      .def_readwrite("phi2", &InterferometerConfig::phi2)
      .def_readwrite("delta_omega_z", &InterferometerConfig::delta_omega_z)
      .def_readwrite("contrast", &InterferometerConfig::contrast)
      .def_readwrite("n_max", &InterferometerConfig::n_max);

  py::class_<FringePoint>(m, "FringePoint")
      .def_readonly("t", &FringePoint::t)
      .def_readonly("phi", &FringePoint::phi)
      .def_readonly("p_est", &FringePoint::p_est)
      .def_readonly("shots", &FringePoint::shots);

  py::class_<FringeDataset>(m, "FringeDataset")
      .def_readonly("points", &FringeDataset::points);

  py::class_<FringeFit>(m, "FringeFit")
      .def_readonly("frequency", &FringeFit::frequency)
      .def_readonly("contrast", &FringeFit::contrast)
      .def_readonly("phase_offset", &FringeFit::phase_offset)
      .def_readonly("residual", &FringeFit::residual)
      .def_readonly("frequency_indeterminate", &FringeFit::frequency_indeterminate);

  m.def("run_point", &run_point, py::arg("config"), py::arg("t"));
  m.def("apply_contrast", &apply_contrast, py::arg("p_ideal"), py::arg("contrast"));
  m.def("sweep", &sweep, py::arg("config"), py::arg("t_grid"), py::arg("shots_per_point") = 0,
        py::arg("seed") = 0);
  m.def("sweep_analytic", &sweep_analytic, py::arg("config"), py::arg("t_grid"));
  m.def("fit_fringe", &fit_fringe, py::arg("dataset"));
  m.def("fringe_csv", &fringe_csv, py::arg("dataset"), py::arg("header_comment") = "");

  py::class_<ShotRecord>(m, "ShotRecord")
      .def_property_readonly("outcomes",
                             [](const ShotRecord& r) {
                               py::array_t<std::uint8_t> arr(r.outcomes.size());
                               std::copy(r.outcomes.begin(), r.outcomes.end(),
                                         arr.mutable_data());
                               return arr;
                             })
      .def_readonly("operating_phi", &ShotRecord::operating_phi)
      .def_readonly("p", &ShotRecord::p)
      .def_readonly("order", &ShotRecord::order)
      .def_readonly("contrast", &ShotRecord::contrast)
      .def_readonly("seed", &ShotRecord::seed)
      .def("__len__", &ShotRecord::size);

  py::class_<AllanRow>(m, "AllanRow")
      .def_readonly("n_b", &AllanRow::n_b)
      .def_readonly("sigma", &AllanRow::sigma)
      .def_readonly("delta_phi", &AllanRow::delta_phi);

  py::class_<AllanResult>(m, "AllanResult")
      .def_readonly("rows", &AllanResult::rows)
      .def_readonly("slope_used", &AllanResult::slope_used);

  m.def("sample_shots", &sample_shots, py::arg("p"), py::arg("m"), py::arg("seed"));
  m.def("sample_operating_point", &sample_operating_point, py::arg("config"), py::arg("t"),
        py::arg("m"), py::arg("seed"));
  m.def("bin_means", &bin_means, py::arg("record"), py::arg("n_b"));
  m.def("allan_variance", &allan_variance, py::arg("bin_means"));
  m.def("fringe_slope", &fringe_slope, py::arg("config"), py::arg("phi"));
  m.def("sensitivity", &sensitivity, py::arg("sigma"), py::arg("slope"));
  m.def("sql_curve", &sql_curve, py::arg("n_b"));
  m.def("allan_scan", &allan_scan, py::arg("record"), py::arg("config"), py::arg("n_b_list"));
  m.def("allan_csv", &allan_csv, py::arg("result"), py::arg("with_sql_column") = false,
        py::arg("header_comment") = "");

  py::class_<OperatorExpr>(m, "OperatorExpr");
  m.def("parse_expr_text", &parse_expr_text, py::arg("text"));
  m.def("format_expr_text", &format_expr_text, py::arg("expr"));
  m.def("expr_to_matrix",
        [](const OperatorExpr& e, const HilbertSpace& s) { return expr_to_matrix(e, s).m; },
        py::arg("expr"), py::arg("space"));

  py::class_<PulseProgram>(m, "PulseProgram")
      .def_property_readonly("step_count", &PulseProgram::step_count)
      .def_readonly("depth", &PulseProgram::depth)
      .def_readonly("delta_t", &PulseProgram::delta_t)
      .def("total_duration", &PulseProgram::total_duration)
      .def("text", &format_program_text);

  py::class_<CompileReport>(m, "CompileReport")
      .def_readonly("measured_error", &CompileReport::measured_error)
      .def_readonly("full_space_error", &CompileReport::full_space_error)
      .def_readonly("step_count", &CompileReport::step_count)
      .def_readonly("depth", &CompileReport::depth)
      .def_readonly("delta_t", &CompileReport::delta_t);

  py::class_<PulseCompiler>(m, "PulseCompiler")
      .def(py::init([](const TrapConfig& trap, int n_max, double omega_ref) {
             CompilerOptions opt;
             opt.omega_ref = omega_ref;
             return PulseCompiler(trap, HilbertSpace(n_max), opt);
           }),
           py::arg("trap"), py::arg("n_max"), py::arg("omega_ref") = 1.0)
      .def("synthesize", &PulseCompiler::synthesize, py::arg("target"), py::arg("time"),
           py::arg("delta_t"), py::arg("max_depth"))
      .def("verify", &PulseCompiler::verify, py::arg("program"), py::arg("target"),
           py::arg("time"));

  m.def("program_unitary",
        [](const PulseProgram& p, const TrapConfig& trap, const HilbertSpace& space) {
          return program_unitary(p, trap, space).m;
        },
        py::arg("program"), py::arg("trap"), py::arg("space"));
}
