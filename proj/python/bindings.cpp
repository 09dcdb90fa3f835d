#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pencil/chiral.hpp"
#include "pencil/config.hpp"
#include "pencil/dressing.hpp"
#include "pencil/errors.hpp"
#include "pencil/flows.hpp"
#include "pencil/runner.hpp"
#include "pencil/structures.hpp"

namespace py = pybind11;
using namespace pencil;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

CMatrix to_matrix(const CArray& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw py::value_error("expected a square 2-d array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  CMatrix m(n, n);
  std::copy(a.data(), a.data() + n * n, m.data().begin());
  return m;
}

py::array_t<cplx> to_array(const CMatrix& m) {
  py::array_t<cplx> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

/// 2-d input is a single component, 3-d input is (m, n, n).
FlowState to_state(const CArray& a) {
  if (a.ndim() == 2) return FlowState::single(to_matrix(a));
  if (a.ndim() != 3 || a.shape(1) != a.shape(2)) throw py::value_error("expected shape (n, n) or (m, n, n)");
  const auto m = static_cast<std::size_t>(a.shape(0)), n = static_cast<std::size_t>(a.shape(1));
  FlowState x(m, n);
  for (std::size_t c = 0; c < m; ++c) std::copy(a.data() + c * n * n, a.data() + (c + 1) * n * n, x[c].data().begin());
  return x;
}

py::array_t<cplx> to_array(const FlowState& x, bool squeeze) {
  if (squeeze && x.m() == 1) return to_array(x[0]);
  const std::size_t m = x.m(), n = x.n();
  py::array_t<cplx> out({m, n, n});
  for (std::size_t c = 0; c < m; ++c) std::copy(x[c].data().begin(), x[c].data().end(), out.mutable_data() + c * n * n);
  return out;
}

std::vector<CMatrix> to_matrices(const std::vector<CArray>& list) {
  std::vector<CMatrix> out;
  for (const auto& a : list) out.push_back(to_matrix(a));
  return out;
}

IntegratorConfig integrator(double dt, int steps, int sign, int record_every) {
  IntegratorConfig cfg;
  cfg.dt = dt;
  cfg.steps = steps;
  cfg.sign = sign;
  cfg.record_every = record_every;
  return cfg;
}

py::dict report_dict(const ConservationReport& rep) {
  py::dict d;
  d["labels"] = rep.labels;
  d["times"] = rep.times;
  d["values"] = rep.values;
  d["drift"] = rep.drift;
  d["max_drift"] = rep.max_drift();
  return d;
}

}  // namespace

PYBIND11_MODULE(_pencil, m) {
  m.doc() = "Compatible matrix products, dressing operators, Lax flows and the deformed chiral model";

  py::register_exception<Error>(m, "PencilError", PyExc_RuntimeError);

  // -- structures ----------------------------------------------------------
  py::class_<A1Structure>(m, "A1Structure")
      .def(py::init([](const CArray& c) { return A1Structure{to_matrix(c)}; }), py::arg("c"))
      .def_property_readonly("c", [](const A1Structure& s) { return to_array(s.c); });
  py::class_<A3Structure>(m, "A3Structure")
      .def(py::init([](const CArray& a, const CArray& b) { return A3Structure{to_matrix(a), to_matrix(b)}; }),
           py::arg("a"), py::arg("b"))
      .def_property_readonly("a", [](const A3Structure& s) { return to_array(s.a); })
      .def_property_readonly("b", [](const A3Structure& s) { return to_array(s.b); });
  py::class_<AkStructure>(m, "AkStructure")
      .def_readonly("k", &AkStructure::k)
      .def_property_readonly("a", [](const AkStructure& s) { return to_array(s.a); })
      .def_property_readonly("b", [](const AkStructure& s) { return to_array(s.b); })
      .def_property_readonly("c", [](const AkStructure& s) { return to_array(s.c); })
      .def_property_readonly("t", [](const AkStructure& s) { return to_array(s.t); });
  py::class_<PMStructure>(m, "PMStructure")
      .def_readonly("k", &PMStructure::k)
      .def_readonly("lambdas", &PMStructure::lambdas)
      .def_readonly("weights", &PMStructure::weights)
      .def_property_readonly("b", [](const PMStructure& s) { return to_array(s.b); })
      .def_property_readonly("t", [](const PMStructure& s) { return to_array(s.t); });

  m.def("make_ak", py::overload_cast<int, std::size_t, std::uint64_t>(&make_ak), py::arg("k"), py::arg("d"),
        py::arg("seed"));
  m.def(
      "make_pm",
      [](int k, std::size_t d, std::uint64_t seed, std::vector<cplx> lambdas, std::vector<cplx> weights) {
        return make_pm(k, d, seed, std::move(lambdas), std::move(weights));
      },
      py::arg("k"), py::arg("d"), py::arg("seed"), py::arg("lambdas"), py::arg("weights"));
  m.def("pm_from_ak", &pm_from_ak);
  m.def("a3_random_pair", [](std::size_t n, std::uint64_t seed) {
    const auto p = a3_random_pair(n, seed);
    return A3Structure{p.a, p.b};
  });
  m.def(
      "a3_canonical",
      [](std::size_t n, std::size_t p, std::vector<cplx> alphas) {
        if (alphas.empty()) alphas.assign(p, 1.0);
        return a3_skew_structure(involution_canonical(n, p, alphas));
      },
      py::arg("n"), py::arg("p"), py::arg("alphas") = std::vector<cplx>{});
  m.def("ak_skew", [](int k, cplx z1) { return ak_skew_structure(k, skew_ak(k, z1).a); }, py::arg("k"), py::arg("z1"));
  m.def("root_of_unity", &root_of_unity);
  m.def("family", [](const Structure& s) { return std::string(family_name(family(s))); });
  m.def("structure_residuals", [](const Structure& s) {
    py::dict d;
    for (const auto& e : structure_residuals(s).entries) d[py::str(e.name)] = e.residual;
    return d;
  });
  m.def("skew_constraint_residual", &skew_constraint_residual);
  m.def("circ", [](const Structure& s, const CArray& x, const CArray& y) {
    return to_array(circ_product(s, to_state(x), to_state(y)), x.ndim() == 2);
  });
  m.def(
      "associativity_residual",
      [](const Structure& s, const std::vector<cplx>& lambdas, int n_triples, std::uint64_t seed) {
        return pencil_associativity_check(s, lambdas, n_triples, seed);
      },
      py::arg("structure"), py::arg("lambdas"), py::arg("n_triples") = 10, py::arg("seed") = 0);

  // -- dressing ------------------------------------------------------------
  py::class_<DressingEvaluation>(m, "Dressing")
      .def_readonly("lam", &DressingEvaluation::lambda)
      .def_readonly("mu", &DressingEvaluation::mu)
      .def("S", [](const DressingEvaluation& e, const CArray& x) { return to_array(e.s(to_state(x)), x.ndim() == 2); })
      .def("S_inv",
           [](const DressingEvaluation& e, const CArray& x) { return to_array(e.s_inv(to_state(x)), x.ndim() == 2); })
      .def("L", [](const DressingEvaluation& e, const CArray& x) { return to_array(e.l_op(to_state(x)), x.ndim() == 2); })
      .def("A", [](const DressingEvaluation& e, const CArray& x) { return to_array(e.a_op(to_state(x)), x.ndim() == 2); })
      .def(
          "homomorphism_residual",
          [](const DressingEvaluation& e, const Structure& s, int n, std::uint64_t seed) {
            return verify_homomorphism(e, s, n, seed);
          },
          py::arg("structure"), py::arg("n_pairs") = 10, py::arg("seed") = 0)
      .def(
          "inverse_residual", [](const DressingEvaluation& e, int n, std::uint64_t seed) { return inverse_residual(e, n, seed); },
          py::arg("n_samples") = 10, py::arg("seed") = 0);
  m.def(
      "dress",
      [](const Structure& s, cplx lam, double inner, double outer) { return dress(s, lam, DressingOptions{inner, outer}); },
      py::arg("structure"), py::arg("lam"), py::arg("inner") = 0.05, py::arg("outer") = 0.4);
  m.def("pm_mu_condition", &pm_mu_condition);

  // -- flows ---------------------------------------------------------------
  m.def(
      "rhs", [](const Structure& s, const CArray& x, int sign) { return to_array(rhs(s, to_state(x), sign), x.ndim() == 2); },
      py::arg("structure"), py::arg("x"), py::arg("sign") = 1);
  m.def("hamiltonian", [](const Structure& s, const CArray& x) { return hamiltonian(s, to_state(x)); });
  m.def(
      "grad_check",
      [](const Structure& s, const CArray& x, int n, std::uint64_t seed) { return grad_check(s, to_state(x), n, seed); },
      py::arg("structure"), py::arg("x"), py::arg("n_entries") = 20, py::arg("seed") = 0);
  m.def(
      "lax_residual",
      [](const Structure& s, const CArray& x, cplx lam, double inner, double outer) {
        return lax_residual(s, to_state(x), lam, DressingOptions{inner, outer});
      },
      py::arg("structure"), py::arg("x"), py::arg("lam"), py::arg("inner") = 0.05, py::arg("outer") = 0.4);
  m.def(
      "integrate",
      [](const Structure& s, const CArray& x0, double dt, int steps, int sign, int record_every) {
        const auto traj = rk4_integrate(s, to_state(x0), integrator(dt, steps, sign, record_every));
        if (traj.aborted) throw Error(ErrorCode::NonFinite, traj.message);
        std::vector<py::array_t<cplx>> states;
        for (const auto& x : traj.states) states.push_back(to_array(x, x0.ndim() == 2));
        return py::make_tuple(traj.times, states);
      },
      py::arg("structure"), py::arg("x0"), py::arg("dt") = 1e-3, py::arg("steps") = 1000, py::arg("sign") = 1,
      py::arg("record_every") = 1);
  m.def(
      "conservation",
      [](const Structure& s, const CArray& x0, double dt, int steps, int sign, const std::vector<cplx>& lambdas,
         int jmax) {
        const auto traj = rk4_integrate(s, to_state(x0), integrator(dt, steps, sign, 10));
        if (traj.aborted) throw Error(ErrorCode::NonFinite, traj.message);
        return report_dict(standard_report(s, traj, lambdas, jmax));
      },
      py::arg("structure"), py::arg("x0"), py::arg("dt") = 1e-3, py::arg("steps") = 1000, py::arg("sign") = 1,
      py::arg("lambdas") = std::vector<cplx>{}, py::arg("jmax") = 3);
  m.def(
      "volterra_equivalence",
      [](const std::vector<CArray>& u, const std::vector<CArray>& j, double dt, int steps, int sign) {
        const auto rep = volterra_equivalence(to_matrices(u), to_matrices(j), integrator(dt, steps, sign, 1));
        py::dict d;
        d["max_deviation"] = rep.max_deviation;
        d["max_off_pattern"] = rep.max_off_pattern;
        d["times"] = rep.times;
        d["deviation"] = rep.deviation;
        return d;
      },
      py::arg("u"), py::arg("j"), py::arg("dt") = 1e-3, py::arg("steps") = 500, py::arg("sign") = 1);

  // -- chiral --------------------------------------------------------------
  py::class_<ChiralOperators>(m, "ChiralOperators")
      .def("T1", [](const ChiralOperators& o, const CArray& x) { return to_array(o.t1(to_matrix(x))); })
      .def("T2", [](const ChiralOperators& o, const CArray& x) { return to_array(o.t2(to_matrix(x))); });
  m.def("build_T1_T2", &build_T1_T2);
  m.def("identity_operators", &identity_operators);
  m.def("decomposition_residual", &decomposition_residual, py::arg("pm"), py::arg("ops"), py::arg("n_samples") = 5,
        py::arg("seed") = 0, py::arg("h") = 1e-4);
  m.def(
      "chiral_refinement",
      [](const PMStructure& pm, const ChiralOperators& ops, double length, std::size_t nodes, int levels,
         double amplitude, bool curvature, cplx lam) {
        RefinementSetup setup;
        setup.length = length;
        setup.nodes = nodes;
        setup.levels = levels;
        setup.curvature = curvature;
        setup.lambda = lam;
        const auto st = refinement_study(pm, ops, NearIdentityProfile(pm.n(), 11, amplitude),
                                         NearIdentityProfile(pm.n(), 12, amplitude), setup);
        py::list rows;
        for (const auto& r : st.rows) {
          py::dict d;
          d["nodes"] = r.nodes;
          d["h"] = r.h;
          d["drift"] = r.drift;
          d["curvature"] = r.curvature;
          d["endpoint_change"] = r.endpoint_change;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["drift_order"] = st.drift_order;
        out["curvature_order"] = st.curvature_order;
        out["endpoint_ratio"] = st.endpoint_ratio;
        return out;
      },
      py::arg("pm"), py::arg("ops"), py::arg("length") = 1.0, py::arg("nodes") = 51, py::arg("levels") = 3,
      py::arg("amplitude") = 0.6, py::arg("curvature") = true, py::arg("lam") = cplx(0.2));

  // -- runner --------------------------------------------------------------
  m.def(
      "run_json",
      [](const std::string& command, const std::string& overlay, const std::vector<std::string>& assignments,
         const std::string& out) {
        Json merged = default_config();
        overlay_config(merged, Json::parse(overlay));
        for (const auto& a : assignments) apply_assignment(merged, a);
        merged["command"] = command;
        const auto res = run(parse_config(merged), out);
        return py::make_tuple(res.exit_code, res.summary.dump());
      },
      py::arg("command"), py::arg("config"), py::arg("assignments"), py::arg("out"));
  m.def("default_config", [] { return default_config().dump(); });
}
