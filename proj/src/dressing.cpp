#include "pencil/dressing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

constexpr double kNewtonTol = 1e-13;
constexpr int kNewtonMaxIter = 50;
constexpr double kPoleTol = 1e-10;

std::string fmt(cplx z) {
  return "(" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")";
}

void check_annulus(cplx lambda, const DressingOptions& opt) {
  const double r = std::abs(lambda);
  if (r == 0.0 || r < opt.inner) {
    throw Error(ErrorCode::LambdaTooSmall,
                "|lambda| = " + std::to_string(r) + " below " + std::to_string(opt.inner));
  }
  if (r > opt.outer) {
    throw Error(ErrorCode::DegenerateParameter,
                "|lambda| = " + std::to_string(r) + " above " + std::to_string(opt.outer));
  }
}

std::vector<CMatrix> powers(const CMatrix& m, int count) {
  std::vector<CMatrix> out{CMatrix::identity(m.rows())};
  for (int i = 1; i < count; ++i) out.push_back(out.back() * m);
  return out;
}

BlockOperator a_from_s(const BlockOperator& s, cplx lambda) {
  if (lambda == cplx{}) return {};
  return s.scaled(1.0 / lambda);
}

struct NewtonResult {
  cplx mu;
  double residual;
  bool ok;
};

struct PoleData {
  int k;
  cplx lambda;
  std::vector<cplx> g;    // t_c l_c^{k-1}
  std::vector<cplx> lk;   // l_c^k
};

PoleData pole_data(const PMStructure& pm, cplx lambda) {
  PoleData d{pm.k, lambda, {}, {}};
  for (std::size_t c = 0; c < pm.m(); ++c) {
    d.g.push_back(pm.weights[c] * std::pow(pm.lambdas[c], pm.k - 1));
    d.lk.push_back(std::pow(pm.lambdas[c], pm.k));
  }
  return d;
}

// F(mu) = k lambda sum_c g_c/(l_c^k - mu^k) - 1
cplx condition(const PoleData& d, cplx mu, cplx* deriv) {
  const cplx muk = std::pow(mu, d.k);
  const cplx dmuk = static_cast<double>(d.k) * std::pow(mu, d.k - 1);
  cplx f{}, df{};
  for (std::size_t c = 0; c < d.g.size(); ++c) {
    const cplx gap = d.lk[c] - muk;
    f += d.g[c] / gap;
    df += d.g[c] * dmuk / (gap * gap);
  }
  const cplx kl = static_cast<double>(d.k) * d.lambda;
  if (deriv) *deriv = kl * df;
  return kl * f - 1.0;
}

NewtonResult newton(const PoleData& d, cplx mu) {
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    cplx df;
    const cplx f = condition(d, mu, &df);
    res = std::abs(f);
    if (!std::isfinite(res)) return {mu, res, false};
    if (res <= kNewtonTol) return {mu, res, true};
    if (df == cplx{}) return {mu, res, false};
    const cplx step = f / df;
    mu -= step;
    if (std::abs(step) <= 1e-15 * std::abs(mu)) {
      // Stagnated at roundoff; accept when the residual is still tiny.
      res = std::abs(condition(d, mu, nullptr));
      return {mu, res, res <= 1e-10};
    }
  }
  res = std::abs(condition(d, mu, nullptr));
  return {mu, res, res <= kNewtonTol};
}

}  // namespace

// ---------------------------------------------------------------------------

DressingEvaluation dressing_a1(const CMatrix& c, cplx lambda) {
  const std::size_t n = c.rows();
  const CMatrix f = CMatrix::identity(n) + lambda * c;
  const CMatrix finv = inverse(f);
  DressingEvaluation ev;
  ev.lambda = lambda;
  ev.s = BlockOperator::single(MultiplierOperator::left(f));
  ev.s_inv = BlockOperator::single(MultiplierOperator::left(finv));
  ev.l_op = BlockOperator::single(MultiplierOperator::right(finv));
  ev.a_op = a_from_s(ev.s, lambda);
  return ev;
}

DressingEvaluation dressing_a3(const CMatrix& a, const CMatrix& b, cplx lambda) {
  const cplx disc = 1.0 - 4.0 * lambda * lambda;
  if (std::abs(disc) < 1e-8) {
    throw Error(ErrorCode::BranchPoint, "1 - 4 lambda^2 vanishes at lambda = " + fmt(lambda));
  }
  const std::size_t n = a.rows();
  const auto id = CMatrix::identity(n);
  const cplx q = std::sqrt(disc);
  const CMatrix kmat = a * b + b * a;
  const CMatrix kinv = inverse(id + lambda * kmat);

  MultiplierOperator s(n);
  s.add_term(((1.0 - q) / 2.0) * b, b);
  s.add_term(((1.0 + q) / 2.0) * id, id);
  s.add_term(lambda * a, b);
  s.add_term(lambda * (b * a), id);

  MultiplierOperator si(n);
  si.add_term(((q - 1.0) / (2.0 * q)) * (kinv * b), b);
  si.add_term(((1.0 + q) / (2.0 * q)) * kinv, id);
  si.add_term((lambda / q) * (kinv * a * b), id);
  si.add_term((-lambda / q) * (kinv * a), b);

  DressingEvaluation ev;
  ev.lambda = lambda;
  ev.s = BlockOperator::single(std::move(s));
  ev.s_inv = BlockOperator::single(std::move(si));
  ev.l_op = adjoint(ev.s_inv);
  ev.a_op = a_from_s(ev.s, lambda);
  return ev;
}

cplx ak_mu(int k, cplx lambda) {
  const double kd = static_cast<double>(k);
  auto ratio = [&](cplx l) { return (2.0 + (kd + 1.0) * l) / (2.0 - (kd - 1.0) * l); };
  if (std::abs(2.0 + (kd + 1.0) * lambda) < 1e-8 || std::abs(2.0 - (kd - 1.0) * lambda) < 1e-8) {
    throw Error(ErrorCode::BranchPoint, "mu has a branch point at lambda = " + fmt(lambda));
  }
  const cplx eps = root_of_unity(k);
  constexpr int kSteps = 64;
  cplx mu = 1.0;
  for (int j = 1; j <= kSteps; ++j) {
    const cplx w = ratio(lambda * (static_cast<double>(j) / kSteps));
    if (std::abs(w) < 1e-6 || !std::isfinite(std::abs(w))) {
      throw Error(ErrorCode::BranchPoint, "path to lambda = " + fmt(lambda) + " meets a branch point");
    }
    cplx root = std::pow(w, 1.0 / kd);
    cplx best = root;
    for (int l = 1; l < k; ++l) {
      root *= eps;
      if (std::abs(root - mu) < std::abs(best - mu)) best = root;
    }
    mu = best;
  }
  return mu;
}

DressingEvaluation dressing_ak(const AkStructure& s, cplx lambda, const DressingOptions& opt) {
  if (s.t.empty()) {
    throw Error(ErrorCode::SingularConstructionInput, "Ak dressing needs the clock matrix T");
  }
  check_annulus(lambda, opt);
  const int k = s.k;
  const double kd = static_cast<double>(k);
  const std::size_t n = s.a.rows();
  const auto id = CMatrix::identity(n);
  const cplx eps = root_of_unity(k);
  const cplx mu = ak_mu(k, lambda);
  const auto ap = powers(s.a, k + 1);
  const auto bp = powers(s.b, k);

  const CMatrix base = (mu * s.t - id) * inverse(s.t - id);
  const cplx muk1 = std::pow(mu, k) - 1.0;
  MultiplierOperator sop(n), sinv(n), lop(n);
  for (int i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const cplx ei = std::pow(eps, i);
    const cplx ek = std::pow(eps, k - i);
    if (std::abs(ei * mu - 1.0) < 1e-12) {
      throw Error(ErrorCode::SingularMatrix, "eps^i mu = 1 at lambda = " + fmt(lambda));
    }
    const CMatrix& apow = ap[static_cast<std::size_t>(k - i)];
    const CMatrix p = (lambda / (ei * mu - 1.0)) * (base * apow);
    const cplx qc = muk1 * muk1 / (lambda * kd * kd * std::pow(mu, k - 1) * (mu - ei));
    const CMatrix q = qc * ((ek * s.t - id) * inverse(ek * mu * s.t - id) * apow);
    sop.add_term(p, bp[iu]);
    sinv.add_term(q, bp[iu]);
    lop.add_term(bp[iu], q);
  }

  DressingEvaluation ev;
  ev.lambda = lambda;
  ev.s = BlockOperator::single(std::move(sop));
  ev.s_inv = BlockOperator::single(std::move(sinv));
  ev.l_op = BlockOperator::single(std::move(lop));
  ev.a_op = a_from_s(ev.s, lambda);
  ev.mu = {mu};
  return ev;
}

// ---------------------------------------------------------------------------

cplx pm_mu_taylor(const PMStructure& pm, std::size_t alpha, cplx lambda) {
  const int k = pm.k;
  const double kd = static_cast<double>(k);
  const cplx la = pm.lambdas[alpha];
  const cplx ta = pm.weights[alpha];
  cplx sum{};
  for (std::size_t g = 0; g < pm.m(); ++g) {
    if (g == alpha) continue;
    const cplx lg = pm.lambdas[g];
    sum += pm.weights[g] * std::pow(lg, k - 1) / (std::pow(lg, k) - std::pow(la, k));
  }
  return la - ta * lambda - ta * ((kd - 1.0) / 2.0 * ta / la + kd * sum) * lambda * lambda;
}

double pm_mu_condition(const PMStructure& pm, cplx lambda, cplx mu) {
  return std::abs(condition(pole_data(pm, lambda), mu, nullptr));
}

MuSolveInfo mu_solver_pm(const PMStructure& pm, cplx lambda, const DressingOptions& opt) {
  check_annulus(lambda, opt);
  require_generic(pm);
  MuSolveInfo info;
  for (std::size_t a = 0; a < pm.m(); ++a) {
    auto direct = newton(pole_data(pm, lambda), pm_mu_taylor(pm, a, lambda));
    // A converged root far from the seed may sit on a neighbouring branch.
    const double drift = std::abs(direct.mu - pm_mu_taylor(pm, a, lambda));
    if (direct.ok && drift <= 0.5 * std::abs(pm.weights[a] * lambda) + 1e-12) {
      info.mu.push_back(direct.mu);
      info.residual.push_back(direct.residual);
      continue;
    }

    // Continuation along the segment from a tiny lambda, halving on failure.
    double f = std::min(1.0, 1e-3 / std::abs(lambda));
    auto start = newton(pole_data(pm, f * lambda), pm_mu_taylor(pm, a, f * lambda));
    if (!start.ok) {
      throw Error(ErrorCode::ContinuationFailed, "no root near lambda_" + std::to_string(a + 1));
    }
    cplx mu = start.mu;
    double step = (1.0 - f) / 8.0;
    int halvings = 0;
    while (f < 1.0) {
      const double next = std::min(1.0, f + step);
      auto r = newton(pole_data(pm, next * lambda), mu);
      if (!r.ok || std::abs(r.mu - mu) > 0.5 * std::abs(mu)) {
        step *= 0.5;
        if (++halvings > 30) {
          throw Error(ErrorCode::ContinuationFailed,
                      "continuation of mu_" + std::to_string(a + 1) + " stalled at lambda = " +
                          fmt(f * lambda));
        }
        continue;
      }
      mu = r.mu;
      f = next;
      ++info.continuation_steps;
    }
    info.mu.push_back(mu);
    info.residual.push_back(pm_mu_condition(pm, lambda, mu));
  }

  for (std::size_t a = 0; a < pm.m(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      const cplx pa = std::pow(info.mu[a], pm.k), pb = std::pow(info.mu[b], pm.k);
      if (std::abs(pa - pb) < 1e-8 * std::max(std::abs(pa), std::abs(pb))) {
        throw Error(ErrorCode::ContinuationFailed,
                    "branches mu_" + std::to_string(b + 1) + " and mu_" + std::to_string(a + 1) +
                        " collide at lambda = " + fmt(lambda));
      }
    }
  }
  return info;
}

DressingEvaluation dressing_pm(const PMStructure& pm, cplx lambda, const DressingOptions& opt) {
  const auto info = mu_solver_pm(pm, lambda, opt);
  const auto& mu = info.mu;
  const std::size_t m = pm.m(), n = pm.n();
  const int k = pm.k;
  const double kd = static_cast<double>(k);
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(n);
  const auto bp = powers(pm.b, k);
  const auto bpi = powers(inverse(pm.b), k);

  std::vector<cplx> lk(m), muk(m);
  for (std::size_t a = 0; a < m; ++a) {
    lk[a] = std::pow(pm.lambdas[a], k);
    muk[a] = std::pow(mu[a], k);
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t s = 0; s < m; ++s) {
      if (std::abs(lk[a] - muk[s]) < kPoleTol * std::max(std::abs(lk[a]), std::abs(muk[s]))) {
        throw Error(ErrorCode::PoleCollision, "lambda_" + std::to_string(a + 1) + "^k = mu_" +
                                                  std::to_string(s + 1) + "^k");
      }
    }
  }

  BlockOperator sop(m, n), lop(m, n);
  for (int i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const cplx ei = std::pow(eps, i);
    const CMatrix emit = std::pow(eps, -i) * pm.t;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        // S_a <- x_b
        const cplx cs = lambda * pm.weights[b] / (ei * pm.lambdas[b] - mu[a]);
        sop.block(a, b).add_term(cs * ((pm.t - mu[a] * id) * resolvent(emit, pm.lambdas[b]) * bpi[iu]),
                                 bp[iu]);

        // L_b <- x_a: the output index carries mu, the summed input carries lambda.
        cplx num = 1.0, den = kd * kd * std::pow(pm.lambdas[a], k - 1) * std::pow(mu[b], k - 1) *
                                 (pm.lambdas[a] - ei * mu[b]);
        for (std::size_t s = 0; s < m; ++s) {
          num *= (lk[a] - muk[s]) * (lk[s] - muk[b]);
          if (s != a) den *= lk[a] - lk[s];
          if (s != b) den *= muk[b] - muk[s];
        }
        const double sign = (m % 2 == 1) ? 1.0 : -1.0;  // (-1)^{m-1}
        const CMatrix right =
            (pm.t - pm.lambdas[a] * id) * inverse(pm.weights[a] * lambda * (emit - mu[b] * id)) * bpi[iu];
        lop.block(b, a).add_term((sign * num / den) * bp[iu], right);
      }
    }
  }

  DressingEvaluation ev;
  ev.lambda = lambda;
  ev.s = std::move(sop);
  ev.l_op = std::move(lop);
  ev.s_inv = adjoint(ev.l_op);
  ev.a_op = a_from_s(ev.s, lambda);
  ev.mu = mu;
  return ev;
}

BlockOperator pm_lax_operator_untransposed(const PMStructure& pm, cplx lambda, const std::vector<cplx>& mu) {
  const std::size_t m = pm.m(), n = pm.n();
  const int k = pm.k;
  const double kd = static_cast<double>(k);
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(n);
  const auto bp = powers(pm.b, k);
  const auto bpi = powers(inverse(pm.b), k);
  BlockOperator lop(m, n);
  for (int i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const cplx ei = std::pow(eps, i);
    const CMatrix emit = std::pow(eps, -i) * pm.t;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        const cplx la = std::pow(pm.lambdas[a], k), mb = std::pow(mu[b], k);
        cplx num = 1.0, den = kd * kd * std::pow(pm.lambdas[a], k - 1) * std::pow(mu[b], k - 1) *
                                 (pm.lambdas[a] - ei * mu[b]);
        for (std::size_t s = 0; s < m; ++s) {
          num *= (la - std::pow(mu[s], k)) * (std::pow(pm.lambdas[s], k) - mb);
          if (s != a) den *= la - std::pow(pm.lambdas[s], k);
          if (s != b) den *= mb - std::pow(mu[s], k);
        }
        const CMatrix right =
            (pm.t - pm.lambdas[a] * id) * inverse(pm.weights[a] * lambda * (emit - mu[b] * id)) * bpi[iu];
        lop.block(a, b).add_term((-num / den) * bp[iu], right);
      }
    }
  }
  return lop;
}

BlockOperator pm_first_order_coefficient(const PMStructure& pm) {
  const std::size_t m = pm.m(), n = pm.n();
  const int k = pm.k;
  const double kd = static_cast<double>(k);
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(n);
  const auto bp = powers(pm.b, k);
  const auto bpi = powers(inverse(pm.b), k);
  BlockOperator out(m, n);
  for (std::size_t a = 0; a < m; ++a) {
    const cplx la = pm.lambdas[a], ta = pm.weights[a];
    cplx sum{};
    for (std::size_t g = 0; g < m; ++g) {
      if (g == a) continue;
      const cplx lg = pm.lambdas[g];
      sum += pm.weights[g] * std::pow(lg, k - 1) / (std::pow(lg, k) - std::pow(la, k));
    }
    out.block(a, a).add_term(ta * resolvent(pm.t, la) - ((kd - 1.0) / 2.0 * ta / la + kd * sum) * id, id);
    for (int i = 0; i < k; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const cplx ei = std::pow(eps, i);
      for (std::size_t b = 0; b < m; ++b) {
        if (i == 0 && b == a) continue;
        const cplx coef = pm.weights[b] / (ei * pm.lambdas[b] - la);
        out.block(a, b).add_term(
            coef * ((pm.t - la * id) * resolvent(std::pow(eps, -i) * pm.t, pm.lambdas[b]) * bpi[iu]),
            bp[iu]);
      }
    }
  }
  return out;
}

DressingEvaluation dress(const Structure& s, cplx lambda, const DressingOptions& opt) {
  if (const auto* a1 = std::get_if<A1Structure>(&s)) return dressing_a1(a1->c, lambda);
  if (const auto* a3 = std::get_if<A3Structure>(&s)) return dressing_a3(a3->a, a3->b, lambda);
  if (const auto* ak = std::get_if<AkStructure>(&s)) return dressing_ak(*ak, lambda, opt);
  return dressing_pm(std::get<PMStructure>(s), lambda, opt);
}

DressingEvaluation conjugate_dressing(const DressingEvaluation& ev, const CMatrix& t) {
  if (ev.s.m() != 1) throw Error(ErrorCode::DimensionMismatch, "conjugation needs one component");
  const CMatrix tinv = inverse(t);
  MultiplierOperator ad(t.rows()), ad_inv(t.rows());
  ad.add_term(t, tinv);
  ad_inv.add_term(tinv, t);
  DressingEvaluation out = ev;
  out.s = BlockOperator::single(compose(ad, ev.s.block(0, 0)));
  out.s_inv = BlockOperator::single(compose(ev.s_inv.block(0, 0), ad_inv));
  out.l_op = adjoint(out.s_inv);
  out.a_op = a_from_s(out.s, ev.lambda);
  return out;
}

double verify_homomorphism(const DressingEvaluation& ev, const BlockOperator& r, int n_pairs,
                           std::uint64_t seed) {
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int p = 0; p < n_pairs; ++p) {
    const FlowState x = random_state(r.m(), r.n(), rng);
    const FlowState y = random_state(r.m(), r.n(), rng);
    FlowState arg = product(x, y);
    arg.add_scaled(ev.lambda, circ_product(r, x, y));
    worst = std::max(worst, norm(product(ev.s(x), ev.s(y)) - ev.s(arg)));
  }
  return worst;
}

double verify_homomorphism(const DressingEvaluation& ev, const Structure& s, int n_pairs,
                           std::uint64_t seed) {
  return verify_homomorphism(ev, build_R(s), n_pairs, seed);
}

double inverse_residual(const DressingEvaluation& ev, int n_samples, std::uint64_t seed) {
  return op_residual(compose(ev.s_inv, ev.s), BlockOperator::identity(ev.s.m(), ev.s.n()), n_samples,
                     seed);
}

double lax_adjoint_residual(const DressingEvaluation& ev, int n_samples, std::uint64_t seed) {
  return op_residual(ev.l_op, adjoint(ev.s_inv), n_samples, seed);
}

double ak_pm_degeneration_residual(const AkStructure& ak, cplx lambda, const DressingOptions& opt) {
  const PMStructure pm = pm_from_ak(ak);
  const cplx c = (static_cast<double>(ak.k) + 1.0) / 2.0;
  const cplx lp = lambda / (1.0 + c * lambda);
  const auto sa = dressing_ak(ak, lambda, opt);
  DressingOptions wide = opt;
  wide.inner = 0.0;
  wide.outer = std::numeric_limits<double>::infinity();
  const auto sp = dressing_pm(pm, lp, wide);
  return op_residual(sa.s, sp.s.scaled(1.0 + c * lambda), 9, 17);
}

}  // namespace pencil
