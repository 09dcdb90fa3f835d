#include "pencil/chiral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

MultiplierOperator pole_operator(const PMStructure& pm, std::size_t a, std::size_t b) {
  const std::size_t n = pm.n();
  const int k = pm.k;
  const cplx eps = root_of_unity(k);
  const cplx la = pm.lambdas[a], lb = pm.lambdas[b];
  const CMatrix id = CMatrix::identity(n);
  const CMatrix binv = inverse(pm.b);
  const CMatrix head = pm.weights[a] * (pm.t - lb * id);
  MultiplierOperator op(n);
  cplx ei = 1.0;
  CMatrix bi = id, bmi = id;
  for (int i = 0; i < k; ++i) {
    const cplx gap = ei * la - lb;
    if (std::abs(gap) < 1e-10 * std::max({1.0, std::abs(la), std::abs(lb)}))
      throw Error(ErrorCode::ResonantParameters, "eps^i lambda_1 = lambda_2 at i = " + std::to_string(i));
    const CMatrix res = resolvent((1.0 / ei) * pm.t, la);
    op.add_term((1.0 / gap) * (head * res * bmi), bi);
    ei *= eps;
    bi = bi * pm.b;
    bmi = bmi * binv;
  }
  return op;
}

CMatrix f_u(const ChiralOperators& ops, const CMatrix& u, const CMatrix& v) { return commutator(u, ops.t2(v)); }
CMatrix f_v(const ChiralOperators& ops, const CMatrix& v, const CMatrix& u) { return commutator(v, ops.t1(u)); }

void guard(const CMatrix& m, double blowup, std::size_t i, std::size_t j) {
  const double nm = frobenius_norm(m);
  if (!std::isfinite(nm) || nm > blowup)
    throw Error(ErrorCode::NonFinite,
                "chiral field blew up at node (" + std::to_string(i) + ", " + std::to_string(j) + ")");
}

FlowState pair(const CMatrix& a, const CMatrix& b) { return FlowState(std::vector<CMatrix>{a, b}); }

CMatrix unit_random(std::size_t n, SplitMix64& rng) {
  CMatrix x = random_matrix(n, n, rng);
  x *= 1.0 / frobenius_norm(x);
  return x;
}

}  // namespace

ChiralOperators build_T1_T2(const PMStructure& pm) {
  if (pm.m() != 2) throw Error(ErrorCode::DimensionMismatch, "the chiral system needs m = 2");
  return {pole_operator(pm, 0, 1), pole_operator(pm, 1, 0)};
}

ChiralOperators identity_operators(std::size_t n) {
  return {MultiplierOperator::identity(n), MultiplierOperator::identity(n)};
}

double decomposition_residual(const PMStructure& pm, const ChiralOperators& ops, int n_samples,
                              std::uint64_t seed, double h) {
  const DressingOptions relaxed{0.0, std::numeric_limits<double>::infinity()};
  const auto plus = dressing_pm(pm, h, relaxed);
  const auto minus = dressing_pm(pm, -h, relaxed);
  const std::size_t n = pm.n();
  const CMatrix zero = CMatrix::zeros(n);
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const CMatrix x = random_matrix(n, n, rng);
    const FlowState ux = pair(x, zero), vx = pair(zero, x);
    const CMatrix d1 = (1.0 / (2.0 * h)) * (plus.s(ux)[1] - minus.s(ux)[1]);
    const CMatrix d2 = (1.0 / (2.0 * h)) * (plus.s(vx)[0] - minus.s(vx)[0]);
    const CMatrix t1 = ops.t1(x), t2 = ops.t2(x);
    worst = std::max(worst, frobenius_norm(d1 - t1) / std::max(1.0, frobenius_norm(t1)));
    worst = std::max(worst, frobenius_norm(d2 - t2) / std::max(1.0, frobenius_norm(t2)));
  }
  return worst;
}

NearIdentityProfile::NearIdentityProfile(std::size_t n, std::uint64_t seed, double amplitude)
    : n_(n), amplitude_(amplitude) {
  SplitMix64 rng(seed);
  x0_ = unit_random(n, rng);
  x1_ = unit_random(n, rng);
  x2_ = unit_random(n, rng);
}

CMatrix NearIdentityProfile::operator()(double s) const {
  CMatrix m = x0_;
  m.add_scaled(std::sin(s), x1_);
  const double s2 = std::sin(2.0 * s);
  m.add_scaled(s2 * s2, x2_);
  m *= amplitude_;
  for (std::size_t i = 0; i < n_; ++i) m(i, i) += 1.0;
  return m;
}

std::vector<CMatrix> NearIdentityProfile::sample(std::size_t count, double h) const {
  std::vector<CMatrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back((*this)(static_cast<double>(i) * h));
  return out;
}

ChiralField chiral_integrate(const ChiralOperators& ops, const std::vector<CMatrix>& u0,
                             const std::vector<CMatrix>& v0, double ht, double htau, double blowup,
                             bool freeze_v) {
  if (u0.empty() || v0.empty()) throw Error(ErrorCode::DimensionMismatch, "empty initial line");
  if (!(ht > 0.0) || !(htau > 0.0)) throw Error(ErrorCode::ConfigError, "grid steps must be positive");
  const std::size_t n = u0.front().rows();
  for (const auto* line : {&u0, &v0})
    for (const auto& m : *line)
      if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::DimensionMismatch, "initial data sizes differ");
  if (ops.t1.n() != n || ops.t2.n() != n) throw Error(ErrorCode::DimensionMismatch, "operator size mismatch");

  ChiralField f;
  f.grid = {v0.size(), u0.size(), ht, htau};
  const std::size_t nt = f.grid.nt, ntau = f.grid.ntau;
  f.u.assign(nt * ntau, CMatrix());
  f.v.assign(nt * ntau, CMatrix());
  for (std::size_t j = 0; j < ntau; ++j) f.u[f.index(0, j)] = u0[j];
  for (std::size_t i = 0; i < nt; ++i) f.v[f.index(i, 0)] = v0[i];

  // Boundary lines: the other field is known at both ends of the step.
  for (std::size_t j = 0; j + 1 < ntau; ++j) {
    const CMatrix& va = f.v[f.index(0, j)];
    if (freeze_v) {
      f.v[f.index(0, j + 1)] = va;
      continue;
    }
    const CMatrix& ua = f.u[f.index(0, j)];
    const CMatrix& ub = f.u[f.index(0, j + 1)];
    const CMatrix k1 = f_v(ops, va, ua);
    const CMatrix pred = va + htau * k1;
    CMatrix next = va + (0.5 * htau) * (k1 + f_v(ops, pred, ub));
    guard(next, blowup, 0, j + 1);
    f.v[f.index(0, j + 1)] = std::move(next);
  }
  for (std::size_t i = 0; i + 1 < nt; ++i) {
    const CMatrix& ua = f.u[f.index(i, 0)];
    const CMatrix& va = f.v[f.index(i, 0)];
    const CMatrix& vb = f.v[f.index(i + 1, 0)];
    const CMatrix k1 = f_u(ops, ua, va);
    const CMatrix pred = ua + ht * k1;
    CMatrix next = ua + (0.5 * ht) * (k1 + f_u(ops, pred, vb));
    guard(next, blowup, i + 1, 0);
    f.u[f.index(i + 1, 0)] = std::move(next);
  }

  for (std::size_t i = 0; i + 1 < nt; ++i) {
    for (std::size_t j = 0; j + 1 < ntau; ++j) {
      // u comes from (i, j+1) along t, v from (i+1, j) along tau.
      const CMatrix& ua = f.u[f.index(i, j + 1)];
      const CMatrix& va = f.v[f.index(i, j + 1)];
      const CMatrix& vb = f.v[f.index(i + 1, j)];
      const CMatrix& ub = f.u[f.index(i + 1, j)];
      const CMatrix ku = f_u(ops, ua, va);
      const CMatrix u_pred = ua + ht * ku;
      CMatrix v_next;
      CMatrix u_next;
      if (freeze_v) {
        v_next = vb;
        u_next = ua + (0.5 * ht) * (ku + f_u(ops, u_pred, v_next));
      } else {
        const CMatrix kv = f_v(ops, vb, ub);
        const CMatrix v_pred = vb + htau * kv;
        u_next = ua + (0.5 * ht) * (ku + f_u(ops, u_pred, v_pred));
        v_next = vb + (0.5 * htau) * (kv + f_v(ops, v_pred, u_pred));
      }
      guard(u_next, blowup, i + 1, j + 1);
      guard(v_next, blowup, i + 1, j + 1);
      f.u[f.index(i + 1, j + 1)] = std::move(u_next);
      f.v[f.index(i + 1, j + 1)] = std::move(v_next);
    }
  }
  return f;
}

LineDrift line_invariant_drift(const ChiralField& field, int jmax) {
  LineDrift d;
  const std::size_t nt = field.grid.nt, ntau = field.grid.ntau;
  auto rel = [](cplx now, cplx ref) { return std::abs(now - ref) / std::max(1.0, std::abs(ref)); };
  for (std::size_t j = 0; j < ntau; ++j) {
    const auto ref = trace_powers(field.u_at(0, j), jmax);
    for (std::size_t i = 1; i < nt; ++i) {
      const auto now = trace_powers(field.u_at(i, j), jmax);
      for (int p = 0; p < jmax; ++p) d.u = std::max(d.u, rel(now[p], ref[p]));
    }
  }
  for (std::size_t i = 0; i < nt; ++i) {
    const auto ref = trace_powers(field.v_at(i, 0), jmax);
    for (std::size_t j = 1; j < ntau; ++j) {
      const auto now = trace_powers(field.v_at(i, j), jmax);
      for (int p = 0; p < jmax; ++p) d.v = std::max(d.v, rel(now[p], ref[p]));
    }
  }
  return d;
}

double curvature_residual(const ChiralField& field, const PMStructure& pm, cplx lambda,
                          const DressingOptions& opt) {
  if (pm.m() != 2) throw Error(ErrorCode::DimensionMismatch, "the chiral system needs m = 2");
  const std::size_t nt = field.grid.nt, ntau = field.grid.ntau;
  if (nt < 3 || ntau < 3) return 0.0;
  const auto ev = dressing_pm(pm, lambda, opt);
  const CMatrix zero = CMatrix::zeros(field.n());
  const cplx inv = 1.0 / lambda;
  std::vector<FlowState> lt(nt * ntau), mt(nt * ntau);
  for (std::size_t idx = 0; idx < nt * ntau; ++idx) {
    lt[idx] = inv * ev.s(pair(field.u[idx], zero));
    mt[idx] = inv * ev.s(pair(zero, field.v[idx]));
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < nt; ++i) {
    for (std::size_t j = 1; j + 1 < ntau; ++j) {
      const std::size_t c = field.index(i, j);
      FlowState r = (0.5 / field.grid.htau) * (mt[field.index(i, j + 1)] - mt[field.index(i, j - 1)]);
      r.add_scaled(-0.5 / field.grid.ht, lt[field.index(i + 1, j)] - lt[field.index(i - 1, j)]);
      for (std::size_t a = 0; a < 2; ++a) r[a] += commutator(lt[c][a], mt[c][a]);
      worst = std::max(worst, norm(r));
    }
  }
  return worst;
}

RefinementStudy refinement_study(const PMStructure& pm, const ChiralOperators& ops,
                                 const NearIdentityProfile& u_profile, const NearIdentityProfile& v_profile,
                                 const RefinementSetup& setup, const DressingOptions& opt) {
  if (setup.levels < 2 || setup.nodes < 3) throw Error(ErrorCode::ConfigError, "need >= 2 levels and >= 3 nodes");
  RefinementStudy study;
  std::vector<CMatrix> corners;
  for (int l = 0; l < setup.levels; ++l) {
    const std::size_t nodes = (setup.nodes - 1) * (std::size_t{1} << l) + 1;
    const double h = setup.length / static_cast<double>(nodes - 1);
    const auto field = chiral_integrate(ops, u_profile.sample(nodes, h), v_profile.sample(nodes, h), h, h);
    RefinementRow row;
    row.nodes = nodes;
    row.h = h;
    row.drift = line_invariant_drift(field, setup.jmax).max();
    if (setup.curvature) row.curvature = curvature_residual(field, pm, setup.lambda, opt);
    corners.push_back(field.u.back());
    study.rows.push_back(row);
  }
  for (std::size_t l = 0; l + 1 < corners.size(); ++l)
    study.rows[l].endpoint_change = frobenius_norm(corners[l] - corners[l + 1]);
  const std::size_t last = study.rows.size() - 1;
  auto log_ratio = [](double coarse, double fine) {
    return fine > 0.0 && coarse > 0.0 ? std::log2(coarse / fine) : 0.0;
  };
  study.drift_order = log_ratio(study.rows[last - 1].drift, study.rows[last].drift);
  if (setup.curvature) study.curvature_order = log_ratio(study.rows[last - 1].curvature, study.rows[last].curvature);
  if (last >= 2) {
    const double fine = study.rows[last - 1].endpoint_change;
    study.endpoint_ratio = fine > 0.0 ? study.rows[last - 2].endpoint_change / fine : 0.0;
  }
  return study;
}

void write_binary(const ChiralField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  const std::uint64_t header[3] = {field.n(), field.grid.nt, field.grid.ntau};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto* grid : {&field.u, &field.v}) {
    for (const auto& m : *grid) {
      for (const cplx z : m.data()) {
        const double re_im[2] = {z.real(), z.imag()};
        out.write(reinterpret_cast<const char*>(re_im), sizeof(re_im));
      }
    }
  }
  if (!out) throw Error(ErrorCode::ConfigError, "write failed for " + path);
}

ChiralField read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  std::uint64_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  ChiralField f;
  const std::size_t n = header[0];
  f.grid.nt = header[1];
  f.grid.ntau = header[2];
  for (auto* grid : {&f.u, &f.v}) {
    grid->assign(f.grid.nt * f.grid.ntau, CMatrix(n, n));
    for (auto& m : *grid) {
      for (cplx& z : m.data()) {
        double re_im[2];
        in.read(reinterpret_cast<char*>(re_im), sizeof(re_im));
        z = {re_im[0], re_im[1]};
      }
    }
  }
  if (!in) throw Error(ErrorCode::ConfigError, "truncated field file " + path);
  return f;
}

}  // namespace pencil
