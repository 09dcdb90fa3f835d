#pragma once

// Linear maps on Mat_n and on m-tuples of matrices, stored in multiplier
// form x -> sum_j L_j x R_j. The adjoint with respect to the pairing
// tr(x y) is the term-wise swap (L, R) -> (R, L).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pencil/linalg.hpp"

namespace pencil {

/// An m-tuple of n x n matrices: the dynamical variable of every flow.
struct FlowState {
  std::vector<CMatrix> parts;

  FlowState() = default;
  explicit FlowState(std::vector<CMatrix> p) : parts(std::move(p)) {}
  FlowState(std::size_t m, std::size_t n);

  static FlowState single(CMatrix x);

  std::size_t m() const noexcept { return parts.size(); }
  std::size_t n() const noexcept { return parts.empty() ? 0 : parts.front().rows(); }

  CMatrix& operator[](std::size_t a) { return parts[a]; }
  const CMatrix& operator[](std::size_t a) const { return parts[a]; }

  FlowState& operator+=(const FlowState& o);
  FlowState& operator-=(const FlowState& o);
  FlowState& operator*=(cplx s);
  FlowState& add_scaled(cplx s, const FlowState& o);

  friend bool operator==(const FlowState&, const FlowState&) = default;
};

FlowState operator+(FlowState a, const FlowState& b);
FlowState operator-(FlowState a, const FlowState& b);
FlowState operator*(cplx s, FlowState a);

/// Componentwise product (x y)_a = x_a y_a.
FlowState product(const FlowState& x, const FlowState& y);
/// sqrt(sum_a ||x_a||_F^2)
double norm(const FlowState& x);
bool all_finite(const FlowState& x);
FlowState random_state(std::size_t m, std::size_t n, SplitMix64& rng);

struct MultiplierTerm {
  CMatrix left;
  CMatrix right;
};

class MultiplierOperator {
 public:
  MultiplierOperator() = default;
  explicit MultiplierOperator(std::size_t n) : n_(n) {}
  MultiplierOperator(std::size_t n, std::vector<MultiplierTerm> terms);

  static MultiplierOperator identity(std::size_t n);
  /// x -> c x
  static MultiplierOperator left(const CMatrix& c);
  /// x -> x c
  static MultiplierOperator right(const CMatrix& c);

  void add_term(CMatrix left, CMatrix right);

  std::size_t n() const noexcept { return n_; }
  const std::vector<MultiplierTerm>& terms() const noexcept { return terms_; }

  CMatrix operator()(const CMatrix& x) const;

  /// Scales every left factor by s.
  MultiplierOperator scaled(cplx s) const;

 private:
  std::size_t n_ = 0;
  std::vector<MultiplierTerm> terms_;
  // Exact-identity flags let apply() skip trivial products.
  std::vector<char> left_id_;
  std::vector<char> right_id_;
};

/// (op(x))_a = sum_b blocks[a][b](x_b)
class BlockOperator {
 public:
  BlockOperator() = default;
  BlockOperator(std::size_t m, std::size_t n);

  /// 1 x 1 block operator wrapping a single-component map.
  static BlockOperator single(MultiplierOperator op);
  static BlockOperator identity(std::size_t m, std::size_t n);

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }

  MultiplierOperator& block(std::size_t a, std::size_t b) { return blocks_[a * m_ + b]; }
  const MultiplierOperator& block(std::size_t a, std::size_t b) const { return blocks_[a * m_ + b]; }

  FlowState operator()(const FlowState& x) const;

  BlockOperator scaled(cplx s) const;
  std::size_t term_count() const;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<MultiplierOperator> blocks_;
};

/// Term-list concatenation: x -> a(x) + b(x).
MultiplierOperator sum(const MultiplierOperator& a, const MultiplierOperator& b);
BlockOperator sum(const BlockOperator& a, const BlockOperator& b);

FlowState apply(const MultiplierOperator& op, const FlowState& x);
FlowState apply(const BlockOperator& op, const FlowState& x);

MultiplierOperator adjoint(const MultiplierOperator& op);
/// Transposes the block table and adjoints each block.
BlockOperator adjoint(const BlockOperator& op);

/// apply(compose(a, b), x) == apply(a, apply(b, x)). Term counts multiply.
MultiplierOperator compose(const MultiplierOperator& a, const MultiplierOperator& b);
BlockOperator compose(const BlockOperator& a, const BlockOperator& b);

/// Probabilistic equality of maps: max over seeded random samples of
/// ||a(x) - b(x)||_F / max(1, ||x||_F). Term lists need not match.
double op_residual(const MultiplierOperator& a, const MultiplierOperator& b, int n_samples,
                   std::uint64_t seed);
double op_residual(const BlockOperator& a, const BlockOperator& b, int n_samples,
                   std::uint64_t seed);

/// R -> R + ad_t, i.e. x -> R(x) + t x - x t.
MultiplierOperator gauge_transform(const MultiplierOperator& r, const CMatrix& t);

}  // namespace pencil
