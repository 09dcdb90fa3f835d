#include "doctest.h"
#include "pencil/errors.hpp"
#include "pencil/flows.hpp"
#include "support.hpp"

using namespace pencil;

namespace {

FlowState skew_random(std::size_t n, std::uint64_t seed) {
  const CMatrix m = random_matrix(n, seed);
  return FlowState::single(0.3 * (m - m.transpose()));
}

IntegratorConfig unit_run(double dt = 1e-3, int steps = 1000) {
  IntegratorConfig cfg;
  cfg.dt = dt;
  cfg.steps = steps;
  cfg.record_every = 10;
  return cfg;
}

}  // namespace

TEST_CASE("A1 right-hand side") {
  const CMatrix c = random_matrix(3, 1);
  const Structure s = A1Structure{c};
  const FlowState x = testing::random_state(1, 3, 2);
  const CMatrix g = c * x[0] + x[0] * c;
  CHECK(frobenius_norm(rhs(s, x, +1)[0] - commutator(g, x[0])) < 1e-13);
  CHECK(norm(rhs(s, x, -1) - rhs_commutator_form(s, x)) < 1e-13);
  CHECK(norm(rhs(s, FlowState::single(CMatrix::identity(3)), +1)) < 1e-15);

  const std::vector<cplx> d1{1.0, 2.0, 3.0}, d2{0.5, -1.0, 2.0};
  const Structure sd = A1Structure{CMatrix::diagonal(d1)};
  CHECK(norm(rhs(sd, FlowState::single(CMatrix::diagonal(d2)), +1)) == 0.0);
}

TEST_CASE("A3 commutator form is the sign -1 orientation") {
  auto bp = a3_random_pair(4, 3);
  const Structure s = A3Structure{bp.a, bp.b};
  const FlowState x = testing::random_state(1, 4, 4);
  CHECK(norm(rhs(s, x, -1) - rhs_commutator_form(s, x)) < 1e-12);
  CHECK_THROWS_AS(rhs_commutator_form(make_ak(2, 1, 1), x), Error);
}

TEST_CASE("explicit PM system") {
  const auto pm = make_pm(2, 2, 3, {1.0, 2.0}, {0.3, 0.5});
  const FlowState x = testing::random_state(2, 4, 5);
  CHECK(norm(rhs_pm_explicit(pm, x) - rhs(pm, x, +1)) < 1e-10);
  CHECK(norm(rhs_pm_explicit_unswapped(pm, x) - rhs(pm, x, +1)) > 1e-3);
  FlowState ids(2, 4);
  for (auto& p : ids.parts) p = CMatrix::identity(4);
  CHECK(norm(rhs_pm_explicit(pm, ids)) < 1e-13);

  // m = k = 1 is the A1 commutator with c = t (T - lambda)^{-1}.
  const CMatrix t = random_matrix(3, 6);
  const auto p11 = make_pm(1, t, {cplx(0.7, 0.2)}, {cplx(0.4, -0.1)});
  const CMatrix c = cplx(0.4, -0.1) * resolvent(t, cplx(0.7, 0.2));
  const FlowState y = testing::random_state(1, 3, 7);
  CHECK(norm(rhs_pm_explicit(p11, y) - rhs(A1Structure{c}, y, +1)) < 1e-12);
}

TEST_CASE("RK4 basics") {
  const Structure s = A1Structure{random_matrix(3, 1)};
  const FlowState id = FlowState::single(CMatrix::identity(3));
  const auto tr = rk4_integrate(s, id, unit_run(1e-2, 50));
  for (const auto& x : tr.states) CHECK(x == id);

  const FlowState x0 = testing::random_state(1, 3, 2);
  const auto traj = rk4_integrate(s, x0, unit_run());
  REQUIRE_FALSE(traj.aborted);
  const auto t0 = trace_powers(x0[0], 3);
  const auto t1 = trace_powers(traj.back()[0], 3);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(t1[j] - t0[j]) < 1e-10 * std::max(1.0, std::abs(t0[j])));

  const BlockOperator r = build_R(s);
  const double ratio = richardson_ratio([&](const FlowState& x) { return rhs(r, x, +1); }, x0, 0.5, 0.05);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("RK4 blow-up is reported") {
  IntegratorConfig cfg = unit_run(0.1, 1000);
  const auto tr = rk4_integrate([](const FlowState& x) { return product(x, x); },
                                FlowState::single(CMatrix::scalar(2, 1.0)), cfg);
  CHECK(tr.aborted);
  CHECK(tr.states.size() >= 1);
  cfg.sign = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("Hamiltonian and gradient") {
  const CMatrix c = random_matrix(3, 1);
  const Structure s = A1Structure{c};
  CHECK(hamiltonian(s, FlowState(1, 3)) == cplx{});
  const FlowState x = testing::random_state(1, 3, 2);
  CHECK(std::abs(hamiltonian(s, x) - trace(x[0] * x[0] * c)) < 1e-13);

  const auto pm = make_pm(2, 2, 3, {1.0, 2.0}, {0.3, 0.5});
  CHECK(grad_check(pm, testing::random_state(2, 4, 4), 20, 1) < 1e-5);
  CHECK(grad_check(make_ak(3, 1, 2), testing::random_state(1, 3, 5), 20, 2) < 1e-5);
}

TEST_CASE("named integrals") {
  auto bp = a3_random_pair(4, 3);
  const Structure s = A3Structure{bp.a, bp.b};
  const auto at_id = named_integrals(s, FlowState::single(CMatrix::identity(4)));
  CHECK(std::abs(at_id[0].value - trace(bp.a * bp.b + bp.b * bp.a)) < 1e-13);

  const Structure unit = A1Structure{CMatrix::identity(3)};
  const auto v = named_integrals(unit, testing::random_state(1, 3, 1));
  CHECK(std::abs(v[5].value - v[1].value) < 1e-13);  // H_2_1 == H_2_0

  CHECK_THROWS_AS(named_integrals(make_ak(2, 1, 1), FlowState(1, 2)), Error);

  const auto traj = rk4_integrate(s, testing::flow_state(1, 4, 2), unit_run());
  const auto rep = standard_report(s, traj, {}, 3);
  CHECK(rep.max_drift() < 1e-8);
}

TEST_CASE("spectral invariants") {
  const CMatrix c = random_matrix(3, 1);
  const Structure s = A1Structure{c};
  const auto zero = spectral_invariants(s, FlowState(1, 3), {0.2}, 3);
  for (const auto& l : zero) CHECK(l.value == cplx{});

  const FlowState x = testing::random_state(1, 3, 2);
  const auto one = spectral_invariants(s, x, {0.2}, 1);
  CHECK(std::abs(one[0].value - trace(x[0] * inverse(CMatrix::identity(3) + 0.2 * c))) < 1e-13);

  const auto ak = make_ak(3, 1, 3);
  const auto traj = rk4_integrate(ak, testing::flow_state(1, 3, 4), unit_run());
  const auto rep = standard_report(ak, traj, {0.1, cplx(0, 0.2), -0.15}, 3);
  CHECK(rep.max_drift() < 1e-8);
}

TEST_CASE("Lax residual") {
  const Structure a1 = A1Structure{random_matrix(3, 1)};
  const FlowState x = testing::random_state(1, 3, 2);
  CHECK(lax_residual(a1, x, 0.2) < 1e-10);
  const auto ev = dress(a1, 0.2);
  CHECK(lax_residual(a1, ev, x, -1) > 1e-3);

  auto bp = a3_random_pair(4, 4);
  const Structure a3 = A3Structure{bp.a, bp.b};
  CHECK(lax_residual(a3, testing::random_state(1, 4, 3), 0.2) < 1e-9);
  CHECK(lax_residual(a3, FlowState::single(CMatrix::identity(4)), 0.2) < 1e-10);

  const auto pm = make_pm(2, 2, 3, {1.0, 2.0}, {0.3, 0.5});
  CHECK(lax_residual(pm, testing::random_state(2, 4, 5), cplx(0.1, 0.1)) < 1e-8);
}

TEST_CASE("time reversal") {
  auto bp = a3_random_pair(4, 5);
  const Structure s = A3Structure{bp.a, bp.b};
  CHECK(reversal_residual(s, testing::flow_state(1, 4, 6), unit_run()) < 1e-9);
}

TEST_CASE("Volterra chain") {
  const std::vector<CMatrix> u{CMatrix{{0.3}}, CMatrix{{-0.2}}, CMatrix{{0.5}}};
  const std::vector<CMatrix> zero(3, CMatrix{{0.0}});
  for (const auto& d : volterra_chain(u, zero, -1)) CHECK(d == CMatrix{{0.0}});

  const std::vector<CMatrix> j{CMatrix{{1.0}}, CMatrix{{0.7}}, CMatrix{{-0.4}}};
  IntegratorConfig cfg = unit_run(1e-3, 500);
  for (int sign : {-1, +1}) {
    cfg.sign = sign;
    const auto rep = volterra_equivalence(u, j, cfg);
    CHECK(rep.max_deviation < 1e-8);
    CHECK(rep.max_off_pattern < 1e-10);
  }

  SplitMix64 rng(3);
  std::vector<CMatrix> ub, jb;
  for (int k = 0; k < 4; ++k) {
    ub.push_back(0.5 * random_matrix(2, 2, rng));
    jb.push_back(random_matrix(2, 2, rng));
  }
  const auto rep = volterra_equivalence(ub, jb, cfg);
  CHECK(rep.max_deviation < 1e-8);
  CHECK(rep.max_off_pattern < 1e-10);

  const std::vector<CMatrix> bad{CMatrix{{1.0}}, CMatrix::identity(2), CMatrix{{1.0}}};
  CHECK_THROWS_AS(volterra_chain(bad, j, 1), Error);
}

TEST_CASE("skew reductions") {
  const std::vector<cplx> al{1.0, 1.0};
  const CMatrix a = involution_canonical(4, 2, al);
  const Structure s = a3_skew_structure(a);
  CHECK(skew_preservation(s, FlowState(1, 4), unit_run()) == 0.0);
  CHECK(skew_preservation(s, skew_random(4, 1), unit_run()) < 1e-8);

  const std::vector<cplx> al1{1.0};
  CHECK(skew_preservation(a3_skew_structure(involution_canonical(4, 1, al1)), skew_random(4, 2),
                          unit_run()) < 1e-8);

  const cplx alpha(1.2, 0.0);
  const auto sk = skew_ak(2, alpha * alpha);
  CHECK(skew_preservation(ak_skew_structure(2, sk.a), skew_random(2, 3), unit_run()) < 1e-8);

  const auto sk3 = skew_ak(3, 0.3);
  CHECK(skew_preservation(ak_skew_structure(3, sk3.a), skew_random(3, 4), unit_run()) < 1e-8);

  auto bp = a3_random_pair(4, 1);
  CHECK_THROWS_AS(skew_preservation(A3Structure{bp.a, bp.b}, skew_random(4, 5), unit_run()), Error);
}

TEST_CASE("conservation report output") {
  const Structure s = A1Structure{random_matrix(3, 1)};
  const auto traj = rk4_integrate(s, testing::random_state(1, 3, 2), unit_run(1e-2, 20));
  const auto rep = standard_report(s, traj, {0.2}, 2);
  CHECK(rep.labels.front() == "H");
  const auto csv = rep.to_csv();
  CHECK(csv.rfind("t,H_re,H_im", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(traj.times.size()) + 1);
  CHECK(rep.drift_json().find("\"H\"") != std::string::npos);
}
