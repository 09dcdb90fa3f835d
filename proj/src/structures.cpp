#include "pencil/structures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

constexpr double kGenericPivot = 1e-10;
constexpr double kDistinctGap = 1e-6;

std::vector<CMatrix> powers(const CMatrix& m, int count) {
  std::vector<CMatrix> out;
  out.reserve(static_cast<std::size_t>(count));
  out.push_back(CMatrix::identity(m.rows()));
  for (int i = 1; i < count; ++i) out.push_back(out.back() * m);
  return out;
}

struct Overloaded {
  template <class... Ts>
  struct Impl : Ts... {
    using Ts::operator()...;
  };
};

template <class... Ts>
Overloaded::Impl<Ts...> overloaded(Ts... ts) {
  return {ts...};
}

BlockOperator build_R_pm(const PMStructure& pm) {
  const std::size_t m = pm.m();
  const std::size_t n = pm.n();
  const int k = pm.k;
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(n);
  const auto bpow = powers(pm.b, k);
  const auto bpow_inv = powers(inverse(pm.b), k);

  BlockOperator r(m, n);
  for (std::size_t a = 0; a < m; ++a) {
    const cplx la = pm.lambdas[a];
    const CMatrix t_minus_la = pm.t - la * id;
    cplx scalar_shift{};
    for (int i = 0; i < k; ++i) {
      const cplx ei = std::pow(eps, i);
      const cplx emi = std::pow(eps, -i);
      for (std::size_t b = 0; b < m; ++b) {
        if (i == 0 && b == a) continue;
        const cplx lb = pm.lambdas[b];
        const cplx coef = pm.weights[b] / (ei * lb - la);
        const CMatrix left = coef * (t_minus_la * resolvent(emi * pm.t, lb)) * bpow_inv[i];
        r.block(a, b).add_term(left, bpow[i]);
        scalar_shift += ei * coef;
      }
    }
    const CMatrix diag = pm.weights[a] * resolvent(pm.t, la) - scalar_shift * id;
    r.block(a, a).add_term(diag, id);
  }
  return r;
}

}  // namespace

cplx root_of_unity(int k) {
  if (k < 1) throw Error(ErrorCode::BadShape, "root_of_unity needs k >= 1");
  switch (k) {
    case 1: return 1.0;
    case 2: return -1.0;
    case 3: return {-0.5, 0.5 * std::sqrt(3.0)};
    case 4: return {0.0, 1.0};
    case 6: return {0.5, 0.5 * std::sqrt(3.0)};
    default: return std::polar(1.0, 2.0 * std::numbers::pi / static_cast<double>(k));
  }
}

Family family(const Structure& s) {
  return std::visit(overloaded([](const A1Structure&) { return Family::A1; },
                               [](const A3Structure&) { return Family::A3; },
                               [](const AkStructure&) { return Family::Ak; },
                               [](const PMStructure&) { return Family::PM; }),
                    s);
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::A1: return "a1";
    case Family::A3: return "a3";
    case Family::Ak: return "ak";
    case Family::PM: return "pm";
  }
  return "?";
}

std::size_t matrix_size(const Structure& s) {
  return std::visit(overloaded([](const A1Structure& x) { return x.c.rows(); },
                               [](const A3Structure& x) { return x.a.rows(); },
                               [](const AkStructure& x) { return x.a.rows(); },
                               [](const PMStructure& x) { return x.n(); }),
                    s);
}

std::size_t components(const Structure& s) {
  if (const auto* pm = std::get_if<PMStructure>(&s)) return pm->m();
  return 1;
}

// ---------------------------------------------------------------------------

ClockShiftPair clock_shift_pair(int k, const CMatrix& d, std::span<const cplx> shifts) {
  if (k < 1) throw Error(ErrorCode::BadShape, "clock_shift_pair needs k >= 1");
  if (!d.square() || d.rows() == 0) throw Error(ErrorCode::BadShape, "seed block D must be square");
  const std::size_t bs = d.rows();
  const std::size_t n = static_cast<std::size_t>(k) * bs;
  const cplx eps = root_of_unity(k);

  const CMatrix dk = power(d, k);
  const std::vector<cplx> unit{cplx{1.0}};
  const auto checks = shifts.empty() ? std::span<const cplx>(unit) : shifts;
  for (const cplx s : checks) {
    const CMatrix shifted = dk - std::pow(s, k) * CMatrix::identity(bs);
    if (pivot_ratio(shifted) < kGenericPivot) {
      throw Error(ErrorCode::SingularConstructionInput,
                  "D^k - s^k is not invertible for s = (" + std::to_string(s.real()) + ", " +
                      std::to_string(s.imag()) + ")");
    }
  }

  ClockShiftPair out{CMatrix(n, n), CMatrix(n, n)};
  const auto id = CMatrix::identity(bs);
  cplx ej = 1.0;  // eps^j by repeated multiplication so that A T - eps T A is exact off the wrap
  for (int j = 0; j < k; ++j, ej *= eps) {
    const std::size_t row = static_cast<std::size_t>(j) * bs;
    const std::size_t col = static_cast<std::size_t>((j + 1) % k) * bs;
    out.a.set_block(row, col, id);
    out.t.set_block(row, row, ej * d);
  }
  return out;
}

BCPair derive_bc(const CMatrix& t, const CMatrix& a, int k) {
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(t.rows());
  const CMatrix inv_t_minus_1 = inverse(t - id);
  return {(eps * t - id) * inv_t_minus_1 * a, t * inv_t_minus_1};
}

AkStructure make_ak(int k, const CMatrix& d) {
  auto [a, t] = clock_shift_pair(k, d);
  auto [b, c] = derive_bc(t, a, k);
  return {k, std::move(a), std::move(b), std::move(c), std::move(t)};
}

AkStructure make_ak(int k, std::size_t d, std::uint64_t seed) {
  return make_ak(k, CMatrix::scalar(d, 2.0) + 0.5 * random_matrix(d, seed));
}

void RelationReport::add(std::string name, double residual) {
  max_residual = std::max(max_residual, residual);
  if (std::isnan(residual)) max_residual = residual;
  entries.push_back({std::move(name), residual});
}

RelationReport verify_relations(const CMatrix& a, const CMatrix& b, const CMatrix& c, int k) {
  if (!a.square() || a.rows() != b.rows() || b.rows() != c.rows() || !b.square() || !c.square()) {
    throw Error(ErrorCode::DimensionMismatch, "verify_relations needs square matrices of equal size");
  }
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(a.rows());
  const auto ap = powers(a, 2 * k);
  const auto bp = powers(b, 2 * k);

  RelationReport rep;
  rep.add("A^k - 1", frobenius_norm(ap[static_cast<std::size_t>(k)] - id));
  rep.add("B^k - 1", frobenius_norm(bp[static_cast<std::size_t>(k)] - id));
  for (int i = 1; i < k; ++i) {
    for (int j = 1; j < k; ++j) {
      if ((i + j) % k == 0) continue;
      const cplx ca = (std::pow(eps, -j) - 1.0) / (std::pow(eps, -i - j) - 1.0);
      const cplx cb = (std::pow(eps, i) - 1.0) / (std::pow(eps, i + j) - 1.0);
      CMatrix r = bp[static_cast<std::size_t>(i)] * ap[static_cast<std::size_t>(j)];
      r.add_scaled(-ca, ap[static_cast<std::size_t>(i + j)]);
      r.add_scaled(-cb, bp[static_cast<std::size_t>(i + j)]);
      rep.add("B^" + std::to_string(i) + " A^" + std::to_string(j), frobenius_norm(r));
    }
  }
  for (int i = 1; i < k; ++i) {
    CMatrix r = bp[static_cast<std::size_t>(i)] * ap[static_cast<std::size_t>(k - i)] - id;
    r.add_scaled(-(std::pow(eps, i) - 1.0), c);
    rep.add("B^" + std::to_string(i) + " A^" + std::to_string(k - i) + " - 1 - (eps^i - 1) C",
            frobenius_norm(r));
  }
  return rep;
}

CMatrix involution_canonical(std::size_t n, std::size_t p, std::span<const cplx> alphas) {
  if (2 * p > n) throw Error(ErrorCode::BadShape, "involution_canonical needs p <= n/2");
  const std::size_t r = std::min(p, n - p);
  if (alphas.size() != r) {
    throw Error(ErrorCode::BadShape, "expected " + std::to_string(r) + " alphas, got " +
                                         std::to_string(alphas.size()));
  }
  CMatrix a(n, n);
  for (std::size_t i = 0; i < p; ++i) a(i, i) = 1.0;
  for (std::size_t i = p; i < n; ++i) a(i, i) = -1.0;
  for (std::size_t i = 0; i < r; ++i) a(i, p + i) = alphas[i];
  return a;
}

InvolutionPair a3_block_pair(const CMatrix& p) {
  if (!p.square()) throw Error(ErrorCode::BadShape, "P must be square");
  const std::size_t d = p.rows();
  const auto id = CMatrix::identity(d);
  InvolutionPair out{CMatrix(2 * d, 2 * d), CMatrix(2 * d, 2 * d)};
  out.a.set_block(0, 0, id);
  out.a.set_block(d, d, -id);
  out.b.set_block(0, 0, p);
  out.b.set_block(0, d, id + p);
  out.b.set_block(d, 0, id - p);
  out.b.set_block(d, d, -p);
  return out;
}

InvolutionPair a3_random_pair(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<cplx> signs(n);
  for (std::size_t i = 0; i < n; ++i) signs[i] = i < n / 2 ? 1.0 : -1.0;
  const CMatrix d = CMatrix::diagonal(signs);
  auto conj = [&](const CMatrix& s) { return s * d * inverse(s); };
  const CMatrix s1 = random_matrix(n, n, rng) + CMatrix::scalar(n, 1.5);
  const CMatrix s2 = random_matrix(n, n, rng) + CMatrix::scalar(n, 1.5);
  return {conj(s1), conj(s2)};
}

SkewAkResult skew_ak(int k, cplx z1) {
  if (k < 2) throw Error(ErrorCode::BadShape, "skew_ak needs k >= 2");
  const cplx eps = root_of_unity(k);
  const auto ku = static_cast<std::size_t>(k);
  std::vector<cplx> z{z1};
  for (int j = 0; j < k; ++j) {
    const cplx den = 1.0 + eps - eps * z.back();
    if (std::abs(den) < 1e-12) {
      throw Error(ErrorCode::DegenerateParameter, "recursion z -> 1/(1 + eps - eps z) hits a pole");
    }
    z.push_back(1.0 / den);
  }
  for (std::size_t i = 0; i < ku; ++i) {
    if (std::abs(z[i]) < 1e-14) throw Error(ErrorCode::DegenerateParameter, "z_i = 0 makes A singular");
  }

  CMatrix a(ku, ku);
  a(ku - 1, 0) = std::sqrt(z[0]);
  for (std::size_t i = 2; i <= ku; ++i) a(i - 2, i - 1) = std::sqrt(z[i - 1]);

  const auto id = CMatrix::identity(ku);
  const CMatrix ata = a.transpose() * a;
  const CMatrix lhs = (ata - (1.0 / eps) * id) * a * (ata - id);
  const CMatrix rhs = eps * ((ata - id) * a * (ata - (1.0 / eps) * id));
  const CMatrix b = inverse(a.transpose());

  SkewAkResult out;
  out.a = a;
  out.closure_residual = std::abs(z[ku] - z[0]);
  z.pop_back();
  out.z = std::move(z);
  out.constraint_residual = frobenius_norm(lhs - rhs);
  out.inverse_residual = frobenius_norm(a.transpose() * b - id);
  return out;
}

CMatrix block_diagonal(std::span<const CMatrix> blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) {
    if (!b.square()) throw Error(ErrorCode::BadShape, "block_diagonal needs square blocks");
    n += b.rows();
  }
  CMatrix out(n, n);
  std::size_t off = 0;
  for (const auto& b : blocks) {
    out.set_block(off, off, b);
    off += b.rows();
  }
  return out;
}

A3Structure a3_skew_structure(const CMatrix& a) { return {a, a.transpose()}; }

AkStructure ak_skew_structure(int k, const CMatrix& a) {
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(a.rows());
  AkStructure s;
  s.k = k;
  s.a = a;
  s.b = inverse(a.transpose());
  s.c = (eps / (1.0 - eps)) * (a.transpose() * a - id);
  const CMatrix c_minus_1 = s.c - id;
  if (pivot_ratio(c_minus_1) >= kGenericPivot) s.t = id + inverse(c_minus_1);
  return s;
}

PMStructure make_pm(int k, const CMatrix& d, std::vector<cplx> lambdas, std::vector<cplx> weights) {
  if (lambdas.empty() || lambdas.size() != weights.size()) {
    throw Error(ErrorCode::BadShape, "PM structure needs m >= 1 poles with one weight each");
  }
  auto [a, t] = clock_shift_pair(k, d, lambdas);
  PMStructure pm{k, std::move(a), std::move(t), std::move(lambdas), std::move(weights)};
  require_generic(pm);
  return pm;
}

PMStructure make_pm(int k, std::size_t d, std::uint64_t seed, std::vector<cplx> lambdas,
                    std::vector<cplx> weights) {
  return make_pm(k, CMatrix::scalar(d, 0.3) + 0.5 * random_matrix(d, seed), std::move(lambdas),
                 std::move(weights));
}

PMStructure pm_from_ak(const AkStructure& ak) {
  if (ak.t.empty()) {
    throw Error(ErrorCode::SingularConstructionInput, "Ak structure has no clock matrix T");
  }
  return {ak.k, ak.b, ak.t, {cplx{1.0}}, {cplx{1.0}}};
}

void require_generic(const PMStructure& pm) {
  const std::size_t n = pm.n();
  if (pm.k < 1 || pm.b.rows() != n || !pm.b.square() || !pm.t.square()) {
    throw Error(ErrorCode::BadShape, "PM structure needs square B, T of equal size and k >= 1");
  }
  if (pm.lambdas.empty() || pm.lambdas.size() != pm.weights.size()) {
    throw Error(ErrorCode::BadShape, "PM structure needs m >= 1 poles with one weight each");
  }
  const cplx eps = root_of_unity(pm.k);
  const auto id = CMatrix::identity(n);
  const CMatrix bk = power(pm.b, pm.k);
  if (frobenius_norm(bk - id) > 1e-10 * std::max(1.0, frobenius_norm(bk))) {
    throw Error(ErrorCode::SingularConstructionInput, "B^k != 1");
  }
  const double bt_scale = std::max(1.0, frobenius_norm(pm.b) * frobenius_norm(pm.t));
  if (frobenius_norm(pm.b * pm.t - eps * (pm.t * pm.b)) > 1e-10 * bt_scale) {
    throw Error(ErrorCode::SingularConstructionInput, "B T != eps T B");
  }
  const CMatrix tk = power(pm.t, pm.k);
  for (std::size_t a = 0; a < pm.m(); ++a) {
    const cplx la = pm.lambdas[a];
    if (std::abs(la) == 0.0 || std::abs(pm.weights[a]) == 0.0) {
      throw Error(ErrorCode::DegenerateParameter, "poles and weights must be nonzero");
    }
    if (pivot_ratio(tk - std::pow(la, pm.k) * id) < kGenericPivot) {
      throw Error(ErrorCode::SingularConstructionInput, "T^k - lambda^k is not invertible");
    }
    for (std::size_t b = 0; b < a; ++b) {
      const cplx pa = std::pow(la, pm.k);
      const cplx pb = std::pow(pm.lambdas[b], pm.k);
      if (std::abs(pa - pb) < kDistinctGap * std::max(std::abs(pa), std::abs(pb))) {
        throw Error(ErrorCode::DegenerateParameter, "lambda_a^k not pairwise distinct");
      }
    }
  }
}

RelationReport structure_residuals(const Structure& s) {
  RelationReport rep;
  std::visit(overloaded(
                 [&](const A1Structure&) {},
                 [&](const A3Structure& x) {
                   const auto id = CMatrix::identity(x.a.rows());
                   rep.add("A^2 - 1", frobenius_norm(x.a * x.a - id));
                   rep.add("B^2 - 1", frobenius_norm(x.b * x.b - id));
                 },
                 [&](const AkStructure& x) {
                   rep = verify_relations(x.a, x.b, x.c, x.k);
                   if (!x.t.empty()) {
                     rep.add("A T - eps T A",
                             frobenius_norm(x.a * x.t - root_of_unity(x.k) * (x.t * x.a)));
                   }
                 },
                 [&](const PMStructure& x) {
                   const auto id = CMatrix::identity(x.n());
                   rep.add("B^k - 1", frobenius_norm(power(x.b, x.k) - id));
                   rep.add("B T - eps T B",
                           frobenius_norm(x.b * x.t - root_of_unity(x.k) * (x.t * x.b)));
                 }),
             s);
  return rep;
}

// ---------------------------------------------------------------------------

BlockOperator build_R(const Structure& s) {
  return std::visit(
      overloaded(
          [](const A1Structure& x) {
            return BlockOperator::single(MultiplierOperator::left(x.c));
          },
          [](const A3Structure& x) {
            MultiplierOperator r(x.a.rows());
            r.add_term(x.a, x.b);
            r.add_term(x.b * x.a, CMatrix::identity(x.a.rows()));
            return BlockOperator::single(std::move(r));
          },
          [](const AkStructure& x) {
            const cplx eps = root_of_unity(x.k);
            const auto ap = powers(x.a, x.k + 1);
            const auto bp = powers(x.b, x.k);
            MultiplierOperator r(x.a.rows());
            for (int i = 1; i < x.k; ++i) {
              r.add_term((1.0 / (std::pow(eps, i) - 1.0)) * ap[static_cast<std::size_t>(x.k - i)],
                         bp[static_cast<std::size_t>(i)]);
            }
            r.add_term(x.c, CMatrix::identity(x.a.rows()));
            return BlockOperator::single(std::move(r));
          },
          [](const PMStructure& x) { return build_R_pm(x); }),
      s);
}

FlowState circ_product(const BlockOperator& r, const FlowState& x, const FlowState& y) {
  FlowState out = product(r(x), y);
  out += product(x, r(y));
  out -= r(product(x, y));
  return out;
}

FlowState circ_product(const Structure& s, const FlowState& x, const FlowState& y) {
  return circ_product(build_R(s), x, y);
}

FlowState pm_closed_form_product(const PMStructure& pm, const FlowState& x, const FlowState& y) {
  const std::size_t m = pm.m();
  const std::size_t n = pm.n();
  if (x.m() != m || y.m() != m) throw Error(ErrorCode::DimensionMismatch, "PM product arity");
  const int k = pm.k;
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(n);
  const auto bpow = powers(pm.b, k);
  const auto bpow_inv = powers(inverse(pm.b), k);

  FlowState out(m, n);
  for (std::size_t a = 0; a < m; ++a) {
    const cplx la = pm.lambdas[a];
    CMatrix acc = pm.weights[a] * (x[a] * resolvent(pm.t, la) * y[a]);
    for (int i = 0; i < k; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const cplx ei = std::pow(eps, i);
      const cplx emi = std::pow(eps, -i);
      for (std::size_t b = 0; b < m; ++b) {
        if (i == 0 && b == a) continue;
        const cplx lb = pm.lambdas[b];
        const cplx coef = pm.weights[b] / (ei * lb - la);
        const CMatrix mab = (pm.t - la * id) * resolvent(emi * pm.t, lb);
        CMatrix term = mab * bpow_inv[iu] * x[b] * bpow[iu] * y[a];
        term += x[a] * mab * bpow_inv[iu] * y[b] * bpow[iu];
        term -= mab * bpow_inv[iu] * x[b] * y[b] * bpow[iu];
        acc.add_scaled(coef, term);
        acc.add_scaled(-ei * coef, x[a] * y[a]);
      }
    }
    out[a] = std::move(acc);
  }
  return out;
}

double pencil_associativity_check(const Structure& s, std::span<const cplx> lambdas,
                                  int n_triples, std::uint64_t seed) {
  const BlockOperator r = build_R(s);
  const std::size_t m = components(s);
  const std::size_t n = matrix_size(s);
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (const cplx lam : lambdas) {
    auto dot = [&](const FlowState& u, const FlowState& v) {
      FlowState out = product(u, v);
      out.add_scaled(lam, circ_product(r, u, v));
      return out;
    };
    for (int t = 0; t < n_triples; ++t) {
      const FlowState x = random_state(m, n, rng);
      const FlowState y = random_state(m, n, rng);
      const FlowState z = random_state(m, n, rng);
      worst = std::max(worst, norm(dot(dot(x, y), z) - dot(x, dot(y, z))));
    }
  }
  return worst;
}

}  // namespace pencil
