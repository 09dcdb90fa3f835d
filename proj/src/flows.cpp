#include "pencil/flows.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "pencil/errors.hpp"

namespace pencil {

namespace {

std::vector<CMatrix> powers(const CMatrix& m, int count) {
  std::vector<CMatrix> out{CMatrix::identity(m.rows())};
  for (int i = 1; i < count; ++i) out.push_back(out.back() * m);
  return out;
}

FlowState commutator_parts(const FlowState& g, const FlowState& x) {
  FlowState out;
  out.parts.reserve(x.m());
  for (std::size_t a = 0; a < x.m(); ++a) out.parts.push_back(commutator(g[a], x[a]));
  return out;
}

double skewness(const FlowState& x) {
  double s = 0.0;
  for (const auto& p : x.parts) s = std::max(s, frobenius_norm(p + p.transpose()));
  return s;
}

// The bracketed aggregate of the explicit PM system. `unswapped` uses M_{a b i}
// in the second sum instead of M_{b a i}.
FlowState pm_explicit(const PMStructure& pm, const FlowState& x, bool unswapped) {
  const std::size_t m = pm.m(), n = pm.n();
  const int k = pm.k;
  const cplx eps = root_of_unity(k);
  const auto id = CMatrix::identity(n);
  const auto bp = powers(pm.b, k);
  const auto bpi = powers(inverse(pm.b), k);
  auto mcoef = [&](std::size_t a, std::size_t b, int i) {
    return (pm.weights[b] / (std::pow(eps, i) * pm.lambdas[b] - pm.lambdas[a])) *
           ((pm.t - pm.lambdas[a] * id) * resolvent(std::pow(eps, -i) * pm.t, pm.lambdas[b]));
  };
  FlowState g(m, n);
  for (std::size_t a = 0; a < m; ++a) {
    const CMatrix ra = pm.weights[a] * resolvent(pm.t, pm.lambdas[a]);
    CMatrix acc = ra * x[a] + x[a] * ra;
    for (int i = 0; i < k; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      for (std::size_t b = 0; b < m; ++b) {
        if (i == 0 && b == a) continue;
        acc += mcoef(a, b, i) * bpi[iu] * x[b] * bp[iu];
        const CMatrix& second = unswapped ? mcoef(a, b, i) : mcoef(b, a, i);
        acc += bp[iu] * x[b] * second * bpi[iu];
      }
    }
    g[a] = std::move(acc);
  }
  return commutator_parts(g, x);
}

}  // namespace

void validate(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw Error(ErrorCode::ConfigError, "dt must be positive");
  if (cfg.steps < 0) throw Error(ErrorCode::ConfigError, "steps must be non-negative");
  if (cfg.sign != 1 && cfg.sign != -1) throw Error(ErrorCode::ConfigError, "sign must be +1 or -1");
  if (cfg.record_every < 1) throw Error(ErrorCode::ConfigError, "record_every must be >= 1");
}

FlowState gradient(const BlockOperator& r, const FlowState& x) { return r(x) + adjoint(r)(x); }

FlowState rhs(const BlockOperator& r, const FlowState& x, int sign) {
  FlowState out = commutator_parts(gradient(r, x), x);
  if (sign < 0) out *= -1.0;
  return out;
}

FlowState rhs(const Structure& s, const FlowState& x, int sign) { return rhs(build_R(s), x, sign); }

FlowState rhs_pm_explicit(const PMStructure& pm, const FlowState& x) { return pm_explicit(pm, x, false); }

FlowState rhs_pm_explicit_unswapped(const PMStructure& pm, const FlowState& x) {
  return pm_explicit(pm, x, true);
}

FlowState rhs_commutator_form(const Structure& s, const FlowState& x) {
  if (const auto* a1 = std::get_if<A1Structure>(&s)) {
    const CMatrix x2 = x[0] * x[0];
    return FlowState::single(x2 * a1->c - a1->c * x2);
  }
  if (const auto* a3 = std::get_if<A3Structure>(&s)) {
    const CMatrix& a = a3->a;
    const CMatrix& b = a3->b;
    const CMatrix g = b * x[0] * a + a * x[0] * b + x[0] * b * a + b * a * x[0];
    return FlowState::single(commutator(x[0], g));
  }
  throw Error(ErrorCode::WrongFamily, "the commutator form exists for a1 and a3 only");
}

// ---------------------------------------------------------------------------

Trajectory rk4_integrate(const RhsFn& f, const FlowState& x0, const IntegratorConfig& cfg) {
  validate(cfg);
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);
  FlowState x = x0;
  const double h = cfg.dt;
  for (int step = 1; step <= cfg.steps; ++step) {
    const FlowState k1 = f(x);
    FlowState y = x;
    y.add_scaled(0.5 * h, k1);
    const FlowState k2 = f(y);
    y = x;
    y.add_scaled(0.5 * h, k2);
    const FlowState k3 = f(y);
    y = x;
    y.add_scaled(h, k3);
    const FlowState k4 = f(y);
    x.add_scaled(h / 6.0, k1);
    x.add_scaled(h / 3.0, k2);
    x.add_scaled(h / 3.0, k3);
    x.add_scaled(h / 6.0, k4);

    const double nx = norm(x);
    if (!std::isfinite(nx) || nx > cfg.blowup) {
      tr.aborted = true;
      tr.message = "blow-up at step " + std::to_string(step) + " (||x|| = " + std::to_string(nx) + ")";
      return tr;
    }
    if (step % cfg.record_every == 0 || step == cfg.steps) {
      tr.times.push_back(step * h);
      tr.states.push_back(x);
    }
  }
  return tr;
}

Trajectory rk4_integrate(const Structure& s, const FlowState& x0, const IntegratorConfig& cfg) {
  const BlockOperator r = build_R(s);
  const BlockOperator g = sum(r, adjoint(r));
  const int sign = cfg.sign;
  return rk4_integrate(
      [&](const FlowState& x) {
        FlowState out = commutator_parts(g(x), x);
        if (sign < 0) out *= -1.0;
        return out;
      },
      x0, cfg);
}

double richardson_ratio(const RhsFn& f, const FlowState& x0, double t_end, double h) {
  auto endpoint = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.steps = static_cast<int>(std::lround(t_end / dt));
    cfg.record_every = cfg.steps;
    return rk4_integrate(f, x0, cfg).back();
  };
  const FlowState ref = endpoint(h / 4.0);
  return norm(endpoint(h) - ref) / norm(endpoint(h / 2.0) - ref);
}

cplx hamiltonian(const BlockOperator& r, const FlowState& x) {
  const FlowState rx = r(x);
  cplx h{};
  for (std::size_t a = 0; a < x.m(); ++a) h += trace(x[a] * rx[a]);
  return h;
}

cplx hamiltonian(const Structure& s, const FlowState& x) { return hamiltonian(build_R(s), x); }

double grad_check(const Structure& s, const FlowState& x, int n_entries, std::uint64_t seed, double h) {
  const BlockOperator r = build_R(s);
  const FlowState g = gradient(r, x);
  double scale = 1.0;
  for (const auto& p : g.parts) scale = std::max(scale, max_abs(p));
  SplitMix64 rng(seed);
  const std::size_t m = x.m(), n = x.n();
  double worst = 0.0;
  for (int e = 0; e < n_entries; ++e) {
    const auto a = static_cast<std::size_t>(rng.next() % m);
    const auto i = static_cast<std::size_t>(rng.next() % n);
    const auto j = static_cast<std::size_t>(rng.next() % n);
    FlowState xp = x, xm = x;
    xp[a](i, j) += h;
    xm[a](i, j) -= h;
    const cplx fd = (hamiltonian(r, xp) - hamiltonian(r, xm)) / (2.0 * h);
    // d/dx_ij sum tr(g x) = g_ji
    worst = std::max(worst, std::abs(fd - g[a](j, i)) / scale);
  }
  return worst;
}

std::vector<Labelled> named_integrals(const Structure& s, const FlowState& xs) {
  const CMatrix& x = xs[0];
  if (const auto* a1 = std::get_if<A1Structure>(&s)) {
    const CMatrix& c = a1->c;
    const auto tp = trace_powers(x, 4);
    return {{"H_1_0", tp[0]},
            {"H_2_0", tp[1]},
            {"H_3_0", tp[2]},
            {"H_4_0", tp[3]},
            {"H_1_1", trace(x * c)},
            {"H_2_1", trace(x * x * c)},
            {"H_2_2", trace(2.0 * (c * c * x * x) + c * x * c * x)}};
  }
  if (const auto* a3 = std::get_if<A3Structure>(&s)) {
    const CMatrix& a = a3->a;
    const CMatrix& b = a3->b;
    const CMatrix ab = a * b, ba = b * a;
    const CMatrix xx = x * x;
    const CMatrix h22 = 2.0 * (ba * ba * xx) + 2.0 * (a * ba * x * b * x) + 2.0 * (ba * b * x * a * x) +
                        ab * x * ab * x + ba * x * ba * x;
    return {{"H_1_1", trace(x * (ab + ba))},
            {"H_1_2", trace(x * (ab * ab + ba * ba))},
            {"H_2_1", trace(ba * xx + a * x * b * x)},
            {"H_2_2", trace(h22)}};
  }
  throw Error(ErrorCode::WrongFamily, "named integrals exist for a1 and a3 only");
}

SpectralProbe::SpectralProbe(const Structure& s, std::vector<cplx> lambdas, int jmax,
                             const DressingOptions& opt)
    : jmax_(jmax) {
  if (jmax < 1) throw Error(ErrorCode::BadShape, "jmax must be >= 1");
  for (cplx l : lambdas) evs_.push_back(dress(s, l, opt));
}

std::vector<Labelled> SpectralProbe::operator()(const FlowState& x) const {
  std::vector<Labelled> out;
  for (std::size_t s = 0; s < evs_.size(); ++s) {
    const FlowState l = evs_[s].l_op(x);
    std::vector<cplx> acc(static_cast<std::size_t>(jmax_));
    for (const auto& p : l.parts) {
      const auto tp = trace_powers(p, jmax_);
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += tp[j];
    }
    for (std::size_t j = 0; j < acc.size(); ++j) {
      out.push_back({"trL" + std::to_string(j + 1) + "_l" + std::to_string(s), acc[j]});
    }
  }
  return out;
}

std::vector<Labelled> spectral_invariants(const Structure& s, const FlowState& x,
                                          const std::vector<cplx>& lambdas, int jmax,
                                          const DressingOptions& opt) {
  return SpectralProbe(s, lambdas, jmax, opt)(x);
}

double lax_residual(const Structure& s, const DressingEvaluation& ev, const FlowState& x, int sign) {
  if (ev.a_op.m() == 0) throw Error(ErrorCode::LambdaTooSmall, "Lax pair needs lambda != 0");
  const FlowState lhs = ev.l_op(rhs(s, x, sign));
  const FlowState comm = commutator_parts(ev.a_op(x), ev.l_op(x));
  const double scale = std::max(1.0, norm(x));
  return norm(lhs - comm) / (scale * scale);
}

double lax_residual(const Structure& s, const FlowState& x, cplx lambda, const DressingOptions& opt) {
  return lax_residual(s, dress(s, lambda, opt), x, +1);
}

// ---------------------------------------------------------------------------

double ConservationReport::max_drift() const {
  double d = 0.0;
  for (double v : drift) d = std::max(d, v);
  return d;
}

std::string ConservationReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "t";
  for (const auto& l : labels) os << "," << l << "_re," << l << "_im";
  os << "\n";
  for (std::size_t s = 0; s < times.size(); ++s) {
    os << times[s];
    for (const auto& series : values) os << "," << series[s].real() << "," << series[s].imag();
    os << "\n";
  }
  return os.str();
}

std::string ConservationReport::drift_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < labels.size(); ++i) j[labels[i]] = drift[i];
  return j.dump();
}

ConservationReport conservation_report(const Trajectory& traj, const std::vector<ProbeFn>& probes) {
  ConservationReport rep;
  rep.times = traj.times;
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    std::vector<Labelled> row;
    for (const auto& p : probes) {
      auto part = p(traj.states[s]);
      row.insert(row.end(), part.begin(), part.end());
    }
    if (s == 0) {
      for (const auto& l : row) rep.labels.push_back(l.label);
      rep.values.resize(row.size());
    }
    for (std::size_t i = 0; i < row.size(); ++i) rep.values[i].push_back(row[i].value);
  }
  for (const auto& series : rep.values) {
    double d = 0.0;
    const cplx v0 = series.front();
    for (const cplx v : series) d = std::max(d, std::abs(v - v0));
    rep.drift.push_back(d / std::max(1.0, std::abs(v0)));
  }
  return rep;
}

ConservationReport standard_report(const Structure& s, const Trajectory& traj,
                                   const std::vector<cplx>& lambdas, int jmax,
                                   const DressingOptions& opt) {
  const BlockOperator r = build_R(s);
  std::vector<ProbeFn> probes;
  probes.push_back([r](const FlowState& x) { return std::vector<Labelled>{{"H", hamiltonian(r, x)}}; });
  const Family f = family(s);
  if (f == Family::A1 || f == Family::A3) {
    probes.push_back([&s](const FlowState& x) { return named_integrals(s, x); });
  }
  if (!lambdas.empty()) {
    auto probe = std::make_shared<SpectralProbe>(s, lambdas, jmax, opt);
    probes.push_back([probe](const FlowState& x) { return (*probe)(x); });
  }
  return conservation_report(traj, probes);
}

double reversal_residual(const Structure& s, const FlowState& x0, const IntegratorConfig& cfg) {
  IntegratorConfig fwd = cfg;
  fwd.sign = +1;
  fwd.record_every = std::max(1, cfg.steps);
  const auto there = rk4_integrate(s, x0, fwd);
  IntegratorConfig back = fwd;
  back.sign = -1;
  const auto home = rk4_integrate(s, there.back(), back);
  return norm(home.back() - x0) / std::max(1.0, norm(x0));
}

// ---------------------------------------------------------------------------

namespace {

std::size_t uniform_block(const std::vector<CMatrix>& blocks, const char* what) {
  if (blocks.empty() || !blocks.front().square()) {
    throw Error(ErrorCode::BadBlockShape, std::string(what) + ": need square blocks");
  }
  const std::size_t b = blocks.front().rows();
  for (const auto& m : blocks) {
    if (m.rows() != b || m.cols() != b) {
      throw Error(ErrorCode::BadBlockShape, std::string(what) + ": blocks of different size");
    }
  }
  return b;
}

}  // namespace

VolterraEmbedding volterra_embed(const std::vector<CMatrix>& u, const std::vector<CMatrix>& j) {
  const std::size_t nb = u.size();
  if (nb < 3 || j.size() != nb) throw Error(ErrorCode::BadBlockShape, "need N >= 3 u and J blocks");
  const std::size_t b = uniform_block(u, "u");
  if (uniform_block(j, "J") != b) throw Error(ErrorCode::BadBlockShape, "u and J sizes differ");
  VolterraEmbedding e{CMatrix(nb * b, nb * b), CMatrix(nb * b, nb * b)};
  for (std::size_t k = 0; k < nb; ++k) {
    e.x.set_block(k * b, ((k + 1) % nb) * b, u[k]);
    e.c.set_block(((k + 1) % nb) * b, k * b, j[k]);
  }
  return e;
}

std::vector<CMatrix> volterra_extract(const CMatrix& x, std::size_t n_blocks) {
  const std::size_t b = x.rows() / n_blocks;
  std::vector<CMatrix> u;
  for (std::size_t k = 0; k < n_blocks; ++k) u.push_back(x.block(k * b, ((k + 1) % n_blocks) * b, b, b));
  return u;
}

double volterra_off_pattern(const CMatrix& x, std::size_t n_blocks) {
  const std::size_t b = x.rows() / n_blocks;
  double worst = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if ((r / b + 1) % n_blocks == c / b) continue;
      worst = std::max(worst, std::abs(x(r, c)));
    }
  }
  return worst;
}

std::vector<CMatrix> volterra_chain(const std::vector<CMatrix>& u, const std::vector<CMatrix>& j,
                                    int sign) {
  const std::size_t nb = u.size();
  if (nb < 3 || j.size() != nb) throw Error(ErrorCode::BadBlockShape, "need N >= 3 u and J blocks");
  uniform_block(u, "u");
  uniform_block(j, "J");
  std::vector<CMatrix> du;
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t kp = (k + 1) % nb, km = (k + nb - 1) % nb;
    CMatrix d = u[k] * u[kp] * j[kp] - j[km] * u[km] * u[k];
    if (sign > 0) d *= -1.0;
    du.push_back(std::move(d));
  }
  return du;
}

VolterraReport volterra_equivalence(const std::vector<CMatrix>& u0, const std::vector<CMatrix>& j,
                                    const IntegratorConfig& cfg) {
  const auto emb = volterra_embed(u0, j);
  const std::size_t nb = u0.size();
  const Structure s = A1Structure{emb.c};
  const auto full = rk4_integrate(s, FlowState::single(emb.x), cfg);
  const int sign = cfg.sign;
  const auto chain = rk4_integrate(
      [&](const FlowState& u) { return FlowState(volterra_chain(u.parts, j, sign)); }, FlowState(u0), cfg);
  if (full.aborted || chain.aborted) throw Error(ErrorCode::NonFinite, "Volterra run blew up");
  VolterraReport rep;
  rep.times = full.times;
  for (std::size_t s_i = 0; s_i < full.states.size(); ++s_i) {
    const CMatrix& x = full.states[s_i][0];
    const auto blocks = volterra_extract(x, nb);
    double dev = 0.0;
    for (std::size_t k = 0; k < nb; ++k) dev = std::max(dev, frobenius_norm(blocks[k] - chain.states[s_i][k]));
    const double off = volterra_off_pattern(x, nb);
    rep.deviation.push_back(dev);
    rep.off_pattern.push_back(off);
    rep.max_deviation = std::max(rep.max_deviation, dev);
    rep.max_off_pattern = std::max(rep.max_off_pattern, off);
  }
  return rep;
}

// ---------------------------------------------------------------------------

double skew_constraint_residual(const Structure& s) {
  if (const auto* a3 = std::get_if<A3Structure>(&s)) {
    const auto id = CMatrix::identity(a3->a.rows());
    return std::max({frobenius_norm(a3->b - a3->a.transpose()), frobenius_norm(a3->a * a3->a - id)});
  }
  if (const auto* ak = std::get_if<AkStructure>(&s)) {
    const auto id = CMatrix::identity(ak->a.rows());
    const cplx eps = root_of_unity(ak->k);
    const CMatrix at = ak->a.transpose();
    const double rb = frobenius_norm(at * ak->b - id);
    const double rc = frobenius_norm(ak->c - (eps / (1.0 - eps)) * (at * ak->a - id));
    return std::max({rb, rc, verify_relations(ak->a, ak->b, ak->c, ak->k).max_residual});
  }
  throw Error(ErrorCode::WrongFamily, "skew reduction exists for a3 and ak only");
}

double skew_preservation(const Structure& s, const FlowState& x0, const IntegratorConfig& cfg) {
  const double cr = skew_constraint_residual(s);
  if (cr > 1e-9) {
    throw Error(ErrorCode::ReductionViolated, "structure constraint residual " + std::to_string(cr));
  }
  if (skewness(x0) > 1e-12 * std::max(1.0, norm(x0))) {
    throw Error(ErrorCode::ReductionViolated, "x0 is not skew-symmetric");
  }
  const auto traj = rk4_integrate(s, x0, cfg);
  if (traj.aborted) throw Error(ErrorCode::NonFinite, traj.message);
  double worst = 0.0;
  for (const auto& x : traj.states) worst = std::max(worst, skewness(x));
  return worst;
}

}  // namespace pencil
