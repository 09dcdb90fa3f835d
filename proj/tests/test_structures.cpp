#include "doctest.h"
#include "pencil/errors.hpp"
#include "pencil/structures.hpp"
#include "support.hpp"

using namespace pencil;

namespace {

const std::vector<cplx> kLambdaSamples{0.1, cplx(0, 0.7), -0.25, cplx(0.2, -0.3), 0.05};

}  // namespace

TEST_CASE("clock/shift pair") {
  const CMatrix d{{3.0}};
  auto [a, t] = clock_shift_pair(2, d);
  CHECK(a == CMatrix({{0.0, 1.0}, {1.0, 0.0}}));
  CHECK(frobenius_norm(t - CMatrix({{3.0, 0.0}, {0.0, -3.0}})) < 1e-15);
  CHECK(frobenius_norm(a * t + t * a) < 1e-15);

  auto p3 = clock_shift_pair(3, CMatrix{{2.0}});
  CHECK(frobenius_norm(p3.a * p3.t - root_of_unity(3) * (p3.t * p3.a)) < 1e-15);
  CHECK(frobenius_norm(power(p3.a, 3) - CMatrix::identity(3)) == 0.0);

  auto p22 = clock_shift_pair(2, random_matrix(2, 3));
  CHECK(frobenius_norm(p22.a * p22.t + p22.t * p22.a) < 1e-15);
  CHECK(frobenius_norm(power(p22.a, 2) - CMatrix::identity(4)) == 0.0);

  CHECK_THROWS_AS(clock_shift_pair(2, CMatrix{{1.0}}), Error);
}

TEST_CASE("derive_bc satisfies the relations") {
  for (int k : {2, 3, 4, 6}) {
    for (std::size_t d : {1u, 2u}) {
      const auto s = make_ak(k, d, 40 + static_cast<std::uint64_t>(k));
      CHECK(verify_relations(s.a, s.b, s.c, k).max_residual < 1e-10);
    }
  }
  auto [a, t] = clock_shift_pair(2, CMatrix{{3.0}});
  auto [b, c] = derive_bc(t, a, 2);
  CHECK(verify_relations(a, b, c, 2).max_residual < 1e-12);

  // k = 1: eps = 1, so B = A and C = T (T - 1)^{-1}.
  const CMatrix a1 = random_matrix(2, 4);
  auto bc1 = derive_bc(CMatrix::scalar(2, 2.0), a1, 1);
  CHECK(frobenius_norm(bc1.b - a1) < 1e-15);
  CHECK(frobenius_norm(bc1.c - CMatrix::scalar(2, 2.0)) < 1e-15);
}

TEST_CASE("verify_relations bookkeeping and sensitivity") {
  const auto s2 = make_ak(2, CMatrix{{3.0}});
  // k = 2: A^2 and B^2 entries plus one B A - 1 entry, no mixed expansion.
  CHECK(verify_relations(s2.a, s2.b, s2.c, 2).entries.size() == 3);

  const auto s = make_ak(3, CMatrix{{2.0}});
  CHECK(verify_relations(s.a, s.b, s.c, 3).max_residual < 1e-11);
  const CMatrix bad = s.b + 1e-3 * random_matrix(3, 9);
  const double r = verify_relations(s.a, bad, s.c, 3).max_residual;
  CHECK(r > 1e-4);
  CHECK(r < 1e-1);
}

TEST_CASE("canonical involutions") {
  for (auto [n, p] : {std::pair<std::size_t, std::size_t>{4, 2}, {4, 1}, {5, 2}}) {
    std::vector<cplx> al(p, 1.0);
    const CMatrix a = involution_canonical(n, p, al);
    CHECK(frobenius_norm(a * a - CMatrix::identity(n)) < 1e-14);
  }
  const std::vector<cplx> zero{0.0, 0.0};
  CHECK(frobenius_norm(power(involution_canonical(4, 2, zero), 2) - CMatrix::identity(4)) == 0.0);
  const std::vector<cplx> wrong{1.0};
  CHECK_THROWS_AS(involution_canonical(4, 2, wrong), Error);
}

TEST_CASE("block pair involutions") {
  auto p0 = a3_block_pair(CMatrix::zeros(2));
  CHECK(p0.b.block(0, 2, 2, 2) == CMatrix::identity(2));
  CHECK(frobenius_norm(p0.b * p0.b - CMatrix::identity(4)) == 0.0);
  auto p1 = a3_block_pair(CMatrix::identity(2));
  CHECK(frobenius_norm(p1.b * p1.b - CMatrix::identity(4)) == 0.0);
  auto pr = a3_block_pair(random_matrix(2, 5));
  CHECK(frobenius_norm(pr.a * pr.a - CMatrix::identity(4)) < 1e-13);
  CHECK(frobenius_norm(pr.b * pr.b - CMatrix::identity(4)) < 1e-13);
  auto rnd = a3_random_pair(4, 3);
  CHECK(frobenius_norm(rnd.a * rnd.a - CMatrix::identity(4)) < 1e-12);
  CHECK(frobenius_norm(rnd.b * rnd.b - CMatrix::identity(4)) < 1e-12);
}

TEST_CASE("skew Ak blocks") {
  const auto one = skew_ak(2, 1.0);
  CHECK(frobenius_norm(one.a - CMatrix({{0.0, 1.0}, {1.0, 0.0}})) < 1e-15);

  const cplx alpha(1.3, 0.2);
  const auto two = skew_ak(2, alpha * alpha);
  CHECK(std::abs(two.a(1, 0) - alpha) < 1e-14);
  CHECK(std::abs(two.a(0, 1) * alpha - 1.0) < 1e-14);
  CHECK(two.constraint_residual < 1e-12);

  const auto three = skew_ak(3, 0.3);
  CHECK(three.constraint_residual < 1e-10);
  CHECK(three.closure_residual < 1e-12);
  CHECK(three.inverse_residual < 1e-12);

  for (int k : {2, 3, 4}) {
    const auto r = skew_ak(k, cplx(0.4, 0.1));
    const auto s = ak_skew_structure(k, r.a);
    CHECK(verify_relations(s.a, s.b, s.c, k).max_residual < 1e-10);
  }
  // z1 = 1 + 1/eps is a pole of f.
  const cplx eps3 = root_of_unity(3);
  CHECK_THROWS_AS(skew_ak(3, 1.0 + 1.0 / eps3), Error);
}

TEST_CASE("build_R term layout") {
  const CMatrix c = random_matrix(3, 1);
  const auto r1 = build_R(A1Structure{c});
  REQUIRE(r1.block(0, 0).terms().size() == 1);
  CHECK(r1.block(0, 0).terms()[0].left == c);

  auto pair = a3_block_pair(random_matrix(2, 2));
  const auto r3 = build_R(A3Structure{pair.a, pair.b});
  REQUIRE(r3.block(0, 0).terms().size() == 2);
  CHECK(r3.block(0, 0).terms()[0].left == pair.a);
  CHECK(r3.block(0, 0).terms()[0].right == pair.b);
  CHECK(r3.block(0, 0).terms()[1].left == pair.b * pair.a);

  // PM with k = 1, m = 1, B = 1 is the A1 structure with c = t (T - lambda)^{-1}.
  const CMatrix t = random_matrix(3, 4);
  const cplx lam(0.3, 0.1), w(0.7, -0.2);
  const auto pm = make_pm(1, t, {lam}, {w});
  const CMatrix cc = w * resolvent(t, lam);
  CHECK(op_residual(build_R(pm), build_R(A1Structure{cc}), 9, 3) < 1e-12);
}

TEST_CASE("circ product") {
  const CMatrix c = random_matrix(3, 1);
  const FlowState x = testing::random_state(1, 3, 2), y = testing::random_state(1, 3, 3);
  CHECK(frobenius_norm(circ_product(A1Structure{c}, x, y)[0] - x[0] * c * y[0]) < 1e-12);

  auto pair = a3_block_pair(random_matrix(2, 2));
  const Structure s = A3Structure{pair.a, pair.b};
  const auto r = build_R(s);
  const FlowState id = FlowState::single(CMatrix::identity(4));
  const FlowState y4 = testing::random_state(1, 4, 4);
  CHECK(norm(circ_product(s, id, y4) - product(r(id), y4)) < 1e-13);

  const auto pm = make_pm(2, 2, 7, {1.0, 2.0}, {0.3, 0.5});
  const FlowState px = testing::random_state(2, 4, 5), py = testing::random_state(2, 4, 6);
  CHECK(norm(circ_product(pm, px, py) - pm_closed_form_product(pm, px, py)) < 1e-10);
}

TEST_CASE("circ product is bilinear and gauge invariant") {
  const auto s = make_ak(3, 1, 9);
  const auto r = build_R(s);
  const FlowState x = testing::random_state(1, 3, 1), y = testing::random_state(1, 3, 2),
                  z = testing::random_state(1, 3, 3);
  CHECK(norm(circ_product(r, x + z, y) - circ_product(r, x, y) - circ_product(r, z, y)) < 1e-12);
  CHECK(norm(circ_product(r, x, y + z) - circ_product(r, x, y) - circ_product(r, x, z)) < 1e-12);

  const CMatrix t = random_matrix(3, 10);
  const auto g = BlockOperator::single(gauge_transform(r.block(0, 0), t));
  CHECK(norm(circ_product(r, x, y) - circ_product(g, x, y)) < 1e-11);

  // Pure ad_t induces the zero product.
  const auto ad = BlockOperator::single(gauge_transform(MultiplierOperator(3), t));
  CHECK(norm(circ_product(ad, x, y)) < 1e-13);
}

TEST_CASE("pencil associativity for every family") {
  const std::vector<cplx> zero{0.0};
  CHECK(pencil_associativity_check(A1Structure{random_matrix(3, 1)}, zero, 5, 1) < 1e-13);
  CHECK(pencil_associativity_check(A1Structure{random_matrix(4, 1)}, kLambdaSamples, 10, 2) < 1e-9);

  auto bp = a3_block_pair(random_matrix(2, 3));
  const std::vector<cplx> a3l{0.1, cplx(0, 0.7)};
  CHECK(pencil_associativity_check(A3Structure{bp.a, bp.b}, a3l, 10, 3) < 1e-10);
  auto rp = a3_random_pair(4, 4);
  CHECK(pencil_associativity_check(A3Structure{rp.a, rp.b}, kLambdaSamples, 10, 4) < 1e-9);

  const std::vector<cplx> akl{0.2, cplx(-0.3, 0.1)};
  CHECK(pencil_associativity_check(make_ak(3, CMatrix{{cplx(2.0, 0.3)}}), akl, 10, 5) < 1e-10);
  for (int k : {2, 4}) {
    CHECK(pencil_associativity_check(make_ak(k, 1, 6), kLambdaSamples, 10, 6) < 1e-9);
  }
  CHECK(pencil_associativity_check(make_pm(2, 2, 7, {1.0, 2.0}, {0.3, 0.5}), kLambdaSamples, 10, 7) <
        1e-9);
}

TEST_CASE("PM genericity is enforced") {
  // lambda_1^2 == lambda_2^2
  CHECK_THROWS_AS(make_pm(2, 1, 1, {1.0, -1.0}, {0.3, 0.5}), Error);
  // T^k - lambda^k singular: D = 1 and lambda = 1
  CHECK_THROWS_AS(make_pm(2, CMatrix{{1.0}}, {1.0}, {0.3}), Error);
  CHECK_THROWS_AS(make_pm(2, 1, 1, {1.0, 2.0}, {0.3}), Error);
  const auto pm = make_pm(3, 1, 2, {1.0, 1.7}, {0.3, -0.4});
  CHECK(structure_residuals(pm).max_residual < 1e-14);
}

TEST_CASE("PM from Ak keeps the clock data") {
  const auto ak = make_ak(3, 1, 4);
  const auto pm = pm_from_ak(ak);
  CHECK(pm.m() == 1);
  CHECK(pm.b == ak.b);
  CHECK(structure_residuals(pm).max_residual < 1e-12);
  // circ_ak = circ_pm + ((k + 1)/2) x y
  const FlowState x = testing::random_state(1, 3, 1), y = testing::random_state(1, 3, 2);
  FlowState diff = circ_product(ak, x, y) - circ_product(pm, x, y);
  diff.add_scaled(-2.0, product(x, y));
  CHECK(norm(diff) < 1e-12);
}

TEST_CASE("block diagonal assembly of skew blocks") {
  const auto b1 = skew_ak(2, 1.7);
  const auto b2 = skew_ak(2, cplx(0.5, 0.3));
  const std::vector<CMatrix> blocks{b1.a, b2.a};
  const CMatrix a = block_diagonal(blocks);
  CHECK(a.rows() == 4);
  const auto s = ak_skew_structure(2, a);
  CHECK(verify_relations(s.a, s.b, s.c, 2).max_residual < 1e-12);
}
