#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "pencil/chiral.hpp"
#include "pencil/errors.hpp"

using namespace pencil;

namespace {

PMStructure two_pole() { return make_pm(2, 2, 3, {1.0, 2.0}, {0.3, 0.5}); }

ChiralField run(const ChiralOperators& ops, std::size_t n, double amp, double len, std::size_t nodes,
                bool freeze_v = false) {
  const NearIdentityProfile pu(n, 11, amp), pv(n, 12, amp);
  const double h = len / static_cast<double>(nodes - 1);
  return chiral_integrate(ops, pu.sample(nodes, h), pv.sample(nodes, h), h, h, 1e6, freeze_v);
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace

TEST_CASE("T1 and T2 in the single-shift case") {
  const CMatrix t = random_matrix(3, 5);
  const cplx l1(0.8, 0.1), l2(-0.4, 0.3), t1(0.5, 0.0), t2(0.2, -0.1);
  const auto pm = make_pm(1, t, {l1, l2}, {t1, t2});
  const auto ops = build_T1_T2(pm);
  CHECK(ops.t1.terms().size() == 1);
  const CMatrix id = CMatrix::identity(3);
  const CMatrix c1 = (t1 / (l1 - l2)) * ((t - l2 * id) * resolvent(t, l1));
  const CMatrix x = random_matrix(3, 6);
  CHECK(frobenius_norm(ops.t1(x) - c1 * x) < 1e-12);

  const auto swapped = make_pm(1, t, {l2, l1}, {t2, t1});
  const auto sw = build_T1_T2(swapped);
  CHECK(frobenius_norm(sw.t1(x) - ops.t2(x)) < 1e-13);
  CHECK(frobenius_norm(sw.t2(x) - ops.t1(x)) < 1e-13);
}

TEST_CASE("T1 and T2 are the first-order dressing coefficients") {
  const auto pm = two_pole();
  const auto ops = build_T1_T2(pm);
  CHECK(ops.t1.terms().size() == 2);
  CHECK(decomposition_residual(pm, ops, 5, 1) < 1e-6);
  CHECK(decomposition_residual(make_pm(3, 3, 7, {1.0, cplx(0.5, 0.8)}, {0.4, 0.2}),
                               build_T1_T2(make_pm(3, 3, 7, {1.0, cplx(0.5, 0.8)}, {0.4, 0.2})), 3, 2) <
        1e-6);
  CHECK(decomposition_residual(pm, identity_operators(4), 2, 1) > 1e-2);
}

TEST_CASE("resonant and malformed parameters") {
  auto pm = two_pole();
  pm.lambdas[1] = -pm.lambdas[0];  // eps = -1 for k = 2
  CHECK_THROWS_AS(build_T1_T2(pm), Error);
  try {
    build_T1_T2(pm);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResonantParameters);
  }
  CHECK_THROWS_AS(build_T1_T2(make_pm(2, 1, 3, {1.0}, {0.3})), Error);
}

TEST_CASE("commuting initial data stays constant") {
  const auto ops = build_T1_T2(two_pole());
  const std::vector<CMatrix> u0(8, CMatrix::scalar(4, 2.0)), v0(6, CMatrix::scalar(4, cplx(0.0, 1.0)));
  const auto f = chiral_integrate(ops, u0, v0, 0.01, 0.01);
  CHECK(f.grid.nt == 6);
  CHECK(f.grid.ntau == 8);
  for (std::size_t k = 0; k < f.u.size(); ++k) {
    CHECK(f.u[k] == u0[0]);
    CHECK(f.v[k] == v0[0]);
  }
  CHECK(curvature_residual(f, two_pole(), 0.2) < 1e-9);
}

TEST_CASE("line invariants converge at second order") {
  const auto ops = build_T1_T2(two_pole());
  const double d1 = line_invariant_drift(run(ops, 4, 0.6, 1.0, 101), 3).max();
  const double d2 = line_invariant_drift(run(ops, 4, 0.6, 1.0, 201), 3).max();
  CHECK(d1 < 1e-6);
  const double p = order(d1, d2);
  CHECK(p > 1.7);
  CHECK(p < 2.3);
}

TEST_CASE("undeformed model keeps the same invariants") {
  const auto ops = identity_operators(4);
  const double d1 = line_invariant_drift(run(ops, 4, 0.6, 1.0, 101), 3).max();
  const double d2 = line_invariant_drift(run(ops, 4, 0.6, 1.0, 201), 3).max();
  CHECK(d1 < 1e-6);
  const double p = order(d1, d2);
  CHECK(p > 1.7);
  CHECK(p < 2.3);
}

TEST_CASE("refinement study") {
  const auto pm = two_pole();
  const auto ops = build_T1_T2(pm);
  const NearIdentityProfile pu(4, 11, 0.3), pv(4, 12, 0.3);
  RefinementSetup setup;
  setup.nodes = 26;
  setup.levels = 3;
  const auto st = refinement_study(pm, ops, pu, pv, setup);
  REQUIRE(st.rows.size() == 3);
  CHECK(st.rows[2].nodes == 101);
  CHECK(st.rows[2].endpoint_change == 0.0);
  CHECK(st.endpoint_ratio > 3.0);
  CHECK(st.endpoint_ratio < 5.0);
  CHECK(std::abs(st.curvature_order - 2.0) < 0.3);
  CHECK(std::abs(st.drift_order - 2.0) < 0.3);
}

TEST_CASE("zero curvature") {
  const auto pm = two_pole();
  const auto ops = build_T1_T2(pm);
  for (cplx lambda : {cplx(0.2), cplx(0.1, 0.15)}) {
    const double r1 = curvature_residual(run(ops, 4, 0.3, 0.5, 51), pm, lambda);
    const double r2 = curvature_residual(run(ops, 4, 0.3, 0.5, 101), pm, lambda);
    CHECK(r1 / r2 > 3.5);
    CHECK(r1 / r2 < 4.5);
  }
  // v held at its tau = 0 values: the residual does not go to zero.
  const double f1 = curvature_residual(run(ops, 4, 0.3, 0.5, 51, true), pm, 0.2);
  const double f2 = curvature_residual(run(ops, 4, 0.3, 0.5, 101, true), pm, 0.2);
  CHECK(f2 > 0.5 * f1);
  CHECK(f2 > 1e-2);
}

TEST_CASE("blow-up aborts") {
  const auto ops = identity_operators(2);
  const CMatrix big{{0.0, 50.0}, {0.0, 0.0}};
  const CMatrix other{{0.0, 0.0}, {50.0, 0.0}};
  const std::vector<CMatrix> u0(40, big), v0(40, other);
  CHECK_THROWS_AS(chiral_integrate(ops, u0, v0, 0.1, 0.1, 1e3), Error);
}

TEST_CASE("binary dump round trip") {
  const auto f = run(build_T1_T2(two_pole()), 4, 0.3, 0.1, 5);
  const auto path = (std::filesystem::temp_directory_path() / "pencil_chiral_test.bin").string();
  write_binary(f, path);
  CHECK(std::filesystem::file_size(path) == 3 * 8 + 2 * 25 * 16 * 16);
  const auto g = read_binary(path);
  CHECK(g.grid.nt == 5);
  CHECK(g.u == f.u);
  CHECK(g.v == f.v);
  std::filesystem::remove(path);
}
