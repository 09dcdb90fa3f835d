#pragma once

// Shared helpers for the unit tests. Oracles live here when more than
// one suite needs them.

#include <complex>
#include <vector>

#include "pencil/linalg.hpp"
#include "pencil/operators.hpp"

namespace pencil::testing {

/// Eigenvalue power sums from the characteristic polynomial via
/// Faddeev-LeVerrier and Newton's identities.
inline std::vector<cplx> faddeev_power_sums(const CMatrix& m, int jmax) {
  const std::size_t n = m.rows();
  std::vector<cplx> c(n + 1);  // char poly coefficients, c[0] = 1
  c[0] = 1.0;
  CMatrix mk = CMatrix::zeros(n);
  for (std::size_t k = 1; k <= n; ++k) {
    CMatrix prev = mk;
    for (std::size_t i = 0; i < n; ++i) prev(i, i) += c[k - 1];
    mk = m * prev;
    c[k] = -trace(mk) / static_cast<double>(k);
  }
  // Newton: p_j = -j c_j - sum_{i=1}^{j-1} c_i p_{j-i}, with c_i = 0 for i > n.
  std::vector<cplx> p(static_cast<std::size_t>(jmax) + 1);
  for (int j = 1; j <= jmax; ++j) {
    cplx s = j <= static_cast<int>(n) ? -static_cast<double>(j) * c[static_cast<std::size_t>(j)] : cplx{};
    for (int i = 1; i < j; ++i) {
      if (i <= static_cast<int>(n)) s -= c[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(j - i)];
    }
    p[static_cast<std::size_t>(j)] = s;
  }
  return {p.begin() + 1, p.end()};
}

/// sum_a tr(x_a y_a)
inline cplx pairing(const FlowState& x, const FlowState& y) {
  cplx s{};
  for (std::size_t a = 0; a < x.m(); ++a) s += trace(x[a] * y[a]);
  return s;
}

inline FlowState random_state(std::size_t m, std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return pencil::random_state(m, n, rng);
}

/// Initial data for integration runs: random entries scaled by 0.3 so that
/// dt = 1e-3 RK4 error stays well below the conservation tolerances.
inline FlowState flow_state(std::size_t m, std::size_t n, std::uint64_t seed) {
  FlowState x = random_state(m, n, seed);
  x *= 0.3;
  return x;
}

}  // namespace pencil::testing
