#include "doctest.h"
#include "pencil/errors.hpp"
#include "pencil/operators.hpp"
#include "support.hpp"

using namespace pencil;

namespace {

MultiplierOperator random_op(std::size_t n, int terms, std::uint64_t seed) {
  SplitMix64 rng(seed);
  MultiplierOperator op(n);
  for (int t = 0; t < terms; ++t) {
    CMatrix l = random_matrix(n, n, rng);
    CMatrix r = random_matrix(n, n, rng);
    op.add_term(std::move(l), std::move(r));
  }
  return op;
}

}  // namespace

TEST_CASE("identity and left multiplier") {
  const CMatrix x = random_matrix(3, 1);
  CHECK(MultiplierOperator::identity(3)(x) == x);
  const CMatrix c = random_matrix(3, 2);
  CHECK(frobenius_norm(MultiplierOperator::left(c)(x) - c * x) < 1e-15);
}

TEST_CASE("apply is linear") {
  const auto op = random_op(4, 3, 5);
  const CMatrix x = random_matrix(4, 6);
  const CMatrix y = random_matrix(4, 7);
  CHECK(frobenius_norm(op(x + y) - op(x) - op(y)) < 1e-12);
}

TEST_CASE("adjoint swaps factors and satisfies the pairing") {
  const CMatrix c = random_matrix(3, 3);
  const auto adj = adjoint(MultiplierOperator::left(c));
  REQUIRE(adj.terms().size() == 1);
  CHECK(adj.terms()[0].left == CMatrix::identity(3));
  CHECK(adj.terms()[0].right == c);

  const auto op = random_op(4, 3, 8);
  const auto back = adjoint(adjoint(op));
  for (std::size_t t = 0; t < op.terms().size(); ++t) {
    CHECK(back.terms()[t].left == op.terms()[t].left);
    CHECK(back.terms()[t].right == op.terms()[t].right);
  }
  const CMatrix x = random_matrix(4, 9);
  const CMatrix y = random_matrix(4, 10);
  const cplx lhs = trace(op(x) * y);
  const cplx rhs = trace(x * adjoint(op)(y));
  CHECK(std::abs(lhs - rhs) < 1e-11 * std::abs(lhs));
}

TEST_CASE("block adjoint pairing") {
  BlockOperator op(2, 3);
  op.block(0, 1) = random_op(3, 2, 1);
  op.block(1, 0) = random_op(3, 1, 2);
  op.block(1, 1) = random_op(3, 2, 3);
  const FlowState x = testing::random_state(2, 3, 4);
  const FlowState y = testing::random_state(2, 3, 5);
  const cplx lhs = testing::pairing(op(x), y);
  const cplx rhs = testing::pairing(x, adjoint(op)(y));
  CHECK(std::abs(lhs - rhs) < 1e-11 * std::abs(lhs));
}

TEST_CASE("compose") {
  const CMatrix a = random_matrix(2, 1), b = random_matrix(2, 2);
  const CMatrix c = random_matrix(2, 3), d = random_matrix(2, 4);
  MultiplierOperator p(2), q(2);
  p.add_term(a, b);
  q.add_term(c, d);
  const auto pq = compose(p, q);
  REQUIRE(pq.terms().size() == 1);
  CHECK(pq.terms()[0].left == a * c);
  CHECK(pq.terms()[0].right == d * b);

  const auto r = random_op(3, 2, 11), s = random_op(3, 2, 12);
  const CMatrix x = random_matrix(3, 13);
  CHECK(frobenius_norm(compose(r, s)(x) - r(s(x))) < 1e-11);
  CHECK(op_residual(compose(MultiplierOperator::identity(3), r), r, 9, 1) < 1e-14);
  CHECK(op_residual(adjoint(compose(r, s)), compose(adjoint(s), adjoint(r)), 9, 2) < 1e-10);
}

TEST_CASE("op_residual is order independent") {
  const CMatrix a = random_matrix(3, 1), b = random_matrix(3, 2);
  const auto id = CMatrix::identity(3);
  MultiplierOperator p(3), q(3);
  p.add_term(a, id);
  p.add_term(id, b);
  q.add_term(id, b);
  q.add_term(a, id);
  CHECK(op_residual(p, p, 9, 0) == 0.0);
  CHECK(op_residual(p, q, 9, 0) < 1e-14);
}

TEST_CASE("gauge transform adds ad_t") {
  const auto r = random_op(3, 2, 3);
  CHECK(op_residual(gauge_transform(r, CMatrix::zeros(3)), r, 9, 1) < 1e-15);
  const CMatrix t = random_matrix(3, 4);
  const CMatrix x = random_matrix(3, 5);
  CHECK(frobenius_norm(gauge_transform(r, t)(x) - r(x) - commutator(t, x)) < 1e-13);
  CHECK(op_residual(gauge_transform(r, t), r, 9, 2) > 1e-3);
}

TEST_CASE("dimension mismatches throw") {
  MultiplierOperator op(3);
  CHECK_THROWS_AS(op.add_term(CMatrix::identity(2), CMatrix::identity(3)), Error);
  CHECK_THROWS_AS(op(CMatrix::identity(2)), Error);
  CHECK_THROWS_AS(compose(MultiplierOperator(2), MultiplierOperator(3)), Error);
}
