#include "gridthreat/attack_io.hpp"
#include "gridthreat/attack_synthesis.hpp"
#include "gridthreat/dc_powerflow.hpp"
#include "gridthreat/error.hpp"
#include "gridthreat/fixtures.hpp"
#include "gridthreat/grid_model.hpp"
#include "gridthreat/lodf.hpp"
#include "gridthreat/scopf.hpp"
#include "gridthreat/state_estimation.hpp"
#include "gridthreat/verification.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gridthreat;

PYBIND11_MODULE(_core, m) {
  m.doc() = "DC grid analysis and stealthy overload attack synthesis";

  py::register_exception<Error>(m, "GridError", PyExc_ValueError);

  py::class_<AttackerLimits>(m, "AttackerLimits")
      .def_readwrite("max_measurements", &AttackerLimits::max_measurements)
      .def_readwrite("max_buses", &AttackerLimits::max_buses)
      .def_readwrite("delta_b", &AttackerLimits::delta_b)
      .def_readwrite("delta_l", &AttackerLimits::delta_l)
      .def_readwrite("target_line_fraction", &AttackerLimits::target_line_fraction)
      .def_readwrite("cost_budget", &AttackerLimits::cost_budget);

  py::class_<GridCase>(m, "GridCase")
      .def_property_readonly("num_buses", &GridCase::num_buses)
      .def_property_readonly("num_lines", &GridCase::num_lines)
      .def_property_readonly("num_measurements", &GridCase::num_measurements)
      .def_readwrite("slack_bus", &GridCase::slack_bus)
      .def_readwrite("attacker", &GridCase::attacker)
      .def("load_vector", &GridCase::load_vector)
      .def("capacities", [](const GridCase& g) {
        std::vector<double> caps;
        for (const auto& ln : g.lines) caps.push_back(ln.capacity);
        return caps;
      })
      .def("serialize", [](const GridCase& g) { return serialize_case(g); });

  m.def("parse_case", [](const std::string& text) { return parse_case(text); });
  m.def("load_case_file", [](const std::string& path) { return load_case_file(path); });
  m.def("fixture_names", &fixture_names);
  m.def("load_fixture", [](const std::string& name) { return load_fixture(name).grid; });
  m.def("fixture_text", [](const std::string& name) { return std::string(fixture_text(name)); });

  py::class_<PowerFlowState>(m, "PowerFlowState")
      .def_readonly("theta", &PowerFlowState::theta)
      .def_readonly("line_flow", &PowerFlowState::line_flow)
      .def_readonly("injection", &PowerFlowState::injection);
  m.def("solve_powerflow", &solve_powerflow, py::arg("grid"), py::arg("gen"), py::arg("load"));
  m.def("build_ptdf", &build_ptdf);

  py::class_<LodfMatrix>(m, "LodfMatrix")
      .def_readonly("factors", &LodfMatrix::factors)
      .def_readonly("islanding", &LodfMatrix::islanding)
      .def("contingencies", &LodfMatrix::contingencies);
  m.def("compute_lodf", &compute_lodf);
  m.def("post_contingency_flows",
        py::overload_cast<const Eigen::VectorXd&, const LodfMatrix&, int>(&post_contingency_flows));

  m.def("evaluate_cost", &evaluate_cost);
  py::class_<ScopfSolution>(m, "ScopfSolution")
      .def_readonly("dispatch", &ScopfSolution::dispatch)
      .def_readonly("cost", &ScopfSolution::cost)
      .def_readonly("flows", &ScopfSolution::flows)
      .def_readonly("committed", &ScopfSolution::committed);
  m.def(
      "solve_scopf",
      [](const GridCase& g, const Eigen::VectorXd& loads, bool contingencies) {
        ScopfOptions o;
        o.contingencies = contingencies;
        return solve_scopf(g, loads, o);
      },
      py::arg("grid"), py::arg("loads"), py::arg("contingencies") = true);

  m.def("build_h_matrix", &build_h_matrix);
  m.def(
      "stealth_check",
      [](const GridCase& g, const Eigen::VectorXd& theta, const Eigen::VectorXd& a,
         const Eigen::VectorXd& c) {
        return stealth_check(g, simulate_measurements(g, theta), a, c);
      },
      py::arg("grid"), py::arg("theta"), py::arg("a"), py::arg("c"));

  py::class_<OverloadPair>(m, "OverloadPair")
      .def_readonly("line", &OverloadPair::line)
      .def_readonly("outage", &OverloadPair::outage)
      .def_readonly("flow", &OverloadPair::flow)
      .def_readonly("capacity", &OverloadPair::capacity)
      .def("percent_of_capacity", &OverloadPair::percent_of_capacity)
      .def("percent_over", &OverloadPair::percent_over)
      .def("__repr__", [](const OverloadPair& p) {
        return "OverloadPair(line=" + std::to_string(p.line) + ", outage=" +
               std::to_string(p.outage) + ", percent_of_capacity=" +
               std::to_string(p.percent_of_capacity()) + ")";
      });

  py::class_<AttackVector>(m, "AttackVector")
      .def_readonly("attacked_subset", &AttackVector::attacked_subset)
      .def_readonly("attacked_load", &AttackVector::attacked_load)
      .def_readonly("corrupted_dispatch", &AttackVector::corrupted_dispatch)
      .def_readonly("corrupted_cost", &AttackVector::corrupted_cost)
      .def_readonly("overload_pairs", &AttackVector::overload_pairs)
      .def_readonly("compromised", &AttackVector::compromised)
      .def("to_json", [](const AttackVector& a, const GridCase& g) { return attack_to_json(g, a); });

  m.def("synthesize", [](const GridCase& g, int workers) -> py::object {
    const ScopfSolution pre = solve_scopf(g, g.load_vector());
    SearchOptions so;
    so.workers = workers;
    const SynthesisResult r = synthesize(g, pre, goal_from_case(g, pre), so);
    if (!r.witness) return py::none();
    return py::cast(*r.witness);
  }, py::arg("grid"), py::arg("workers") = 1);

  m.def("verify", [](const GridCase& g, const AttackVector& a) {
    const ScopfSolution pre = solve_scopf(g, g.load_vector());
    const VerificationReport v = verify(g, pre, a);
    py::dict d;
    d["stealthy"] = v.stealthy;
    d["confirmed_overloads"] = v.confirmed_overloads;
    d["cost_delta"] = v.cost_delta;
    d["oracle_gap"] = v.oracle_gap;
    return d;
  });
}
