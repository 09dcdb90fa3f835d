#include "pencil/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

bool is_exact_identity(const CMatrix& m) {
  if (!m.square()) return false;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m(r, c) != (r == c ? cplx{1.0} : cplx{})) return false;
  return true;
}

void require_same_m(const FlowState& a, const FlowState& b) {
  if (a.m() != b.m()) {
    throw Error(ErrorCode::DimensionMismatch, "flow states with " + std::to_string(a.m()) +
                                                  " and " + std::to_string(b.m()) + " parts");
  }
}

}  // namespace

FlowState::FlowState(std::size_t m, std::size_t n) : parts(m, CMatrix::zeros(n)) {}

FlowState FlowState::single(CMatrix x) {
  FlowState s;
  s.parts.push_back(std::move(x));
  return s;
}

FlowState& FlowState::operator+=(const FlowState& o) {
  require_same_m(*this, o);
  for (std::size_t a = 0; a < m(); ++a) parts[a] += o.parts[a];
  return *this;
}

FlowState& FlowState::operator-=(const FlowState& o) {
  require_same_m(*this, o);
  for (std::size_t a = 0; a < m(); ++a) parts[a] -= o.parts[a];
  return *this;
}

FlowState& FlowState::operator*=(cplx s) {
  for (auto& p : parts) p *= s;
  return *this;
}

FlowState& FlowState::add_scaled(cplx s, const FlowState& o) {
  require_same_m(*this, o);
  for (std::size_t a = 0; a < m(); ++a) parts[a].add_scaled(s, o.parts[a]);
  return *this;
}

FlowState operator+(FlowState a, const FlowState& b) { return a += b; }
FlowState operator-(FlowState a, const FlowState& b) { return a -= b; }
FlowState operator*(cplx s, FlowState a) { return a *= s; }

FlowState product(const FlowState& x, const FlowState& y) {
  require_same_m(x, y);
  FlowState out;
  out.parts.reserve(x.m());
  for (std::size_t a = 0; a < x.m(); ++a) out.parts.push_back(x[a] * y[a]);
  return out;
}

double norm(const FlowState& x) {
  double s = 0.0;
  for (const auto& p : x.parts) {
    const double f = frobenius_norm(p);
    s += f * f;
  }
  return std::sqrt(s);
}

bool all_finite(const FlowState& x) {
  return std::all_of(x.parts.begin(), x.parts.end(),
                     [](const CMatrix& p) { return all_finite(p); });
}

FlowState random_state(std::size_t m, std::size_t n, SplitMix64& rng) {
  FlowState s;
  for (std::size_t a = 0; a < m; ++a) s.parts.push_back(random_matrix(n, n, rng));
  return s;
}

// ---------------------------------------------------------------------------

MultiplierOperator::MultiplierOperator(std::size_t n, std::vector<MultiplierTerm> terms) : n_(n) {
  for (auto& t : terms) add_term(std::move(t.left), std::move(t.right));
}

MultiplierOperator MultiplierOperator::identity(std::size_t n) {
  MultiplierOperator op(n);
  op.add_term(CMatrix::identity(n), CMatrix::identity(n));
  return op;
}

MultiplierOperator MultiplierOperator::left(const CMatrix& c) {
  MultiplierOperator op(c.rows());
  op.add_term(c, CMatrix::identity(c.rows()));
  return op;
}

MultiplierOperator MultiplierOperator::right(const CMatrix& c) {
  MultiplierOperator op(c.rows());
  op.add_term(CMatrix::identity(c.rows()), c);
  return op;
}

void MultiplierOperator::add_term(CMatrix left, CMatrix right) {
  if (left.rows() != n_ || left.cols() != n_ || right.rows() != n_ || right.cols() != n_) {
    throw Error(ErrorCode::DimensionMismatch,
                "multiplier term is not " + std::to_string(n_) + "x" + std::to_string(n_));
  }
  left_id_.push_back(is_exact_identity(left) ? 1 : 0);
  right_id_.push_back(is_exact_identity(right) ? 1 : 0);
  terms_.push_back({std::move(left), std::move(right)});
}

CMatrix MultiplierOperator::operator()(const CMatrix& x) const {
  if (x.rows() != n_ || x.cols() != n_) {
    throw Error(ErrorCode::DimensionMismatch, "operator on " + std::to_string(n_) +
                                                  "x" + std::to_string(n_) + " applied to " +
                                                  std::to_string(x.rows()) + "x" +
                                                  std::to_string(x.cols()));
  }
  CMatrix out(n_, n_);
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    const auto& t = terms_[j];
    if (left_id_[j] && right_id_[j]) {
      out += x;
    } else if (left_id_[j]) {
      out += x * t.right;
    } else if (right_id_[j]) {
      out += t.left * x;
    } else {
      out += t.left * x * t.right;
    }
  }
  return out;
}

MultiplierOperator MultiplierOperator::scaled(cplx s) const {
  MultiplierOperator out(n_);
  for (const auto& t : terms_) out.add_term(s * t.left, t.right);
  return out;
}

// ---------------------------------------------------------------------------

BlockOperator::BlockOperator(std::size_t m, std::size_t n)
    : m_(m), n_(n), blocks_(m * m, MultiplierOperator(n)) {}

BlockOperator BlockOperator::single(MultiplierOperator op) {
  BlockOperator b(1, op.n());
  b.block(0, 0) = std::move(op);
  return b;
}

BlockOperator BlockOperator::identity(std::size_t m, std::size_t n) {
  BlockOperator b(m, n);
  for (std::size_t a = 0; a < m; ++a) b.block(a, a) = MultiplierOperator::identity(n);
  return b;
}

FlowState BlockOperator::operator()(const FlowState& x) const {
  if (x.m() != m_) {
    throw Error(ErrorCode::DimensionMismatch, "block operator with m=" + std::to_string(m_) +
                                                  " applied to " + std::to_string(x.m()) +
                                                  " parts");
  }
  FlowState out(m_, n_);
  for (std::size_t a = 0; a < m_; ++a) {
    for (std::size_t b = 0; b < m_; ++b) {
      const auto& blk = block(a, b);
      if (blk.terms().empty()) continue;
      out[a] += blk(x[b]);
    }
  }
  return out;
}

BlockOperator BlockOperator::scaled(cplx s) const {
  BlockOperator out(m_, n_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) out.blocks_[i] = blocks_[i].scaled(s);
  return out;
}

std::size_t BlockOperator::term_count() const {
  std::size_t c = 0;
  for (const auto& b : blocks_) c += b.terms().size();
  return c;
}

MultiplierOperator sum(const MultiplierOperator& a, const MultiplierOperator& b) {
  if (a.n() != b.n()) throw Error(ErrorCode::DimensionMismatch, "sum of operators of different n");
  MultiplierOperator out = a;
  for (const auto& t : b.terms()) out.add_term(t.left, t.right);
  return out;
}

BlockOperator sum(const BlockOperator& a, const BlockOperator& b) {
  if (a.m() != b.m() || a.n() != b.n()) {
    throw Error(ErrorCode::DimensionMismatch, "sum of block operators of different shape");
  }
  BlockOperator out(a.m(), a.n());
  for (std::size_t i = 0; i < a.m(); ++i)
    for (std::size_t j = 0; j < a.m(); ++j) out.block(i, j) = sum(a.block(i, j), b.block(i, j));
  return out;
}

FlowState apply(const MultiplierOperator& op, const FlowState& x) {
  FlowState out;
  out.parts.reserve(x.m());
  for (const auto& p : x.parts) out.parts.push_back(op(p));
  return out;
}

FlowState apply(const BlockOperator& op, const FlowState& x) { return op(x); }

MultiplierOperator adjoint(const MultiplierOperator& op) {
  MultiplierOperator out(op.n());
  for (const auto& t : op.terms()) out.add_term(t.right, t.left);
  return out;
}

BlockOperator adjoint(const BlockOperator& op) {
  BlockOperator out(op.m(), op.n());
  for (std::size_t a = 0; a < op.m(); ++a)
    for (std::size_t b = 0; b < op.m(); ++b) out.block(b, a) = adjoint(op.block(a, b));
  return out;
}

MultiplierOperator compose(const MultiplierOperator& a, const MultiplierOperator& b) {
  if (a.n() != b.n()) {
    throw Error(ErrorCode::DimensionMismatch, "compose of operators of different n");
  }
  MultiplierOperator out(a.n());
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms()) out.add_term(ta.left * tb.left, tb.right * ta.right);
  return out;
}

BlockOperator compose(const BlockOperator& a, const BlockOperator& b) {
  if (a.m() != b.m() || a.n() != b.n()) {
    throw Error(ErrorCode::DimensionMismatch, "compose of block operators of different shape");
  }
  BlockOperator out(a.m(), a.n());
  for (std::size_t i = 0; i < a.m(); ++i) {
    for (std::size_t k = 0; k < a.m(); ++k) {
      MultiplierOperator acc(a.n());
      for (std::size_t j = 0; j < a.m(); ++j) acc = sum(acc, compose(a.block(i, j), b.block(j, k)));
      out.block(i, k) = std::move(acc);
    }
  }
  return out;
}

double op_residual(const MultiplierOperator& a, const MultiplierOperator& b, int n_samples,
                   std::uint64_t seed) {
  return op_residual(BlockOperator::single(a), BlockOperator::single(b), n_samples, seed);
}

double op_residual(const BlockOperator& a, const BlockOperator& b, int n_samples,
                   std::uint64_t seed) {
  if (a.m() != b.m() || a.n() != b.n()) {
    throw Error(ErrorCode::DimensionMismatch, "op_residual of operators of different shape");
  }
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const FlowState x = random_state(a.m(), a.n(), rng);
    const double r = norm(a(x) - b(x)) / std::max(1.0, norm(x));
    worst = std::max(worst, r);
  }
  return worst;
}

MultiplierOperator gauge_transform(const MultiplierOperator& r, const CMatrix& t) {
  MultiplierOperator out = r;
  const auto id = CMatrix::identity(r.n());
  out.add_term(t, id);
  out.add_term(-id, t);
  return out;
}

}  // namespace pencil
