#include "pencil/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <thread>

#include "pencil/errors.hpp"

namespace pencil {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << text;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

const PMStructure& require_pm2(const Structure& s) {
  const auto* pm = std::get_if<PMStructure>(&s);
  if (pm == nullptr || pm->m() != 2)
    throw Error(ErrorCode::ConfigError, "chiral runs need structure.family = pm with m = 2");
  return *pm;
}

double ak_mu_residual(int k, cplx lambda, cplx mu) {
  const cplx target = (2.0 + (k + 1.0) * lambda) / (2.0 - (k - 1.0) * lambda);
  return std::abs(std::pow(mu, k) - target) / std::max(1.0, std::abs(target));
}

Json run_verify(const RunConfig& cfg, CheckList& checks) {
  const Structure s = build_structure(cfg.structure);
  if (const auto* pm = std::get_if<PMStructure>(&s)) require_generic(*pm);
  const auto& tol = cfg.tol;
  for (const auto& e : structure_residuals(s).entries) checks.at_most("relation " + e.name, e.residual, tol.algebraic);
  if (cfg.structure.variant == "canonical" || cfg.structure.variant == "skew")
    checks.at_most("skew constraint", skew_constraint_residual(s), tol.algebraic);

  const FlowState x = initial_state(cfg, s, false);
  for (const cplx lambda : cfg.lambdas) {
    const cplx one[] = {lambda};
    checks.at_most("associativity", pencil_associativity_check(s, one, cfg.samples, cfg.check_seed), tol.algebraic,
                   lambda);
    const auto ev = dress(s, lambda, cfg.dressing);
    checks.at_most("homomorphism", verify_homomorphism(ev, s, cfg.samples, cfg.check_seed), tol.dressing, lambda);
    checks.at_most("inverse", inverse_residual(ev, cfg.samples, cfg.check_seed), tol.dressing, lambda);
    checks.at_most("lax adjoint", lax_adjoint_residual(ev, cfg.samples, cfg.check_seed), tol.dressing, lambda);
    if (const auto* ak = std::get_if<AkStructure>(&s)) {
      checks.at_most("mu condition", ak_mu_residual(ak->k, lambda, ev.mu.at(0)), tol.mu, lambda);
    } else if (const auto* pm = std::get_if<PMStructure>(&s)) {
      double worst = 0.0;
      for (const cplx mu : ev.mu) worst = std::max(worst, pm_mu_condition(*pm, lambda, mu));
      checks.at_most("mu condition", worst, tol.mu, lambda);
    }
    checks.at_most("lax", lax_residual(s, ev, x, +1), tol.lax, lambda);
  }
  checks.at_most("gradient", grad_check(s, x, cfg.grad_entries, cfg.check_seed), tol.gradient);
  Json extra;
  extra["family"] = std::string(family_name(family(s)));
  extra["m"] = components(s);
  extra["n"] = matrix_size(s);
  return extra;
}

Json run_flow(const RunConfig& cfg, const fs::path& out, CheckList& checks) {
  const Structure s = build_structure(cfg.structure);
  if (const auto* pm = std::get_if<PMStructure>(&s)) require_generic(*pm);
  const FlowState x0 = initial_state(cfg, s, false);
  const auto traj = rk4_integrate(s, x0, cfg.integrator);
  if (traj.aborted) throw Error(ErrorCode::NonFinite, traj.message);

  const auto report = standard_report(s, traj, cfg.lambdas, cfg.jmax, cfg.dressing);
  write_text(out / "conservation.csv", report.to_csv());
  Json drift = Json::object();
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    drift[report.labels[i]] = report.drift[i];
    checks.at_most("drift " + report.labels[i], report.drift[i], cfg.tol.conservation);
  }
  for (const cplx lambda : cfg.lambdas) checks.at_most("lax", lax_residual(s, x0, lambda, cfg.dressing), cfg.tol.lax, lambda);
  checks.at_most("reversal", reversal_residual(s, x0, cfg.integrator), cfg.tol.conservation);

  Json extra;
  extra["family"] = std::string(family_name(family(s)));
  extra["sign"] = cfg.integrator.sign;
  extra["final_time"] = traj.times.back();
  extra["drift"] = std::move(drift);
  extra["initial_state"] = to_json(x0);
  extra["final_state"] = to_json(traj.back());
  return extra;
}

Json run_volterra(const RunConfig& cfg, const fs::path& out, CheckList& checks) {
  const auto& v = cfg.volterra;
  SplitMix64 rng(v.seed);
  std::vector<CMatrix> u, j;
  for (std::size_t k = 0; k < v.blocks; ++k) u.push_back(v.amplitude * random_matrix(v.block_size, v.block_size, rng));
  for (std::size_t k = 0; k < v.blocks; ++k) j.push_back(random_matrix(v.block_size, v.block_size, rng));
  const auto rep = volterra_equivalence(u, j, cfg.integrator);

  std::ostringstream csv;
  csv << "t,deviation,off_pattern\n";
  for (std::size_t i = 0; i < rep.times.size(); ++i)
    csv << num(rep.times[i]) << ',' << num(rep.deviation[i]) << ',' << num(rep.off_pattern[i]) << '\n';
  write_text(out / "volterra.csv", csv.str());
  checks.at_most("volterra deviation", rep.max_deviation, cfg.tol.volterra);
  checks.at_most("off pattern", rep.max_off_pattern, cfg.tol.off_pattern);

  Json extra;
  extra["blocks"] = v.blocks;
  extra["block_size"] = v.block_size;
  extra["sign"] = cfg.integrator.sign;
  extra["final_time"] = rep.times.back();
  return extra;
}

Json run_skew(const RunConfig& cfg, CheckList& checks) {
  const Structure s = build_structure(cfg.structure);
  checks.at_most("skew constraint", skew_constraint_residual(s), cfg.tol.algebraic);
  const FlowState x0 = initial_state(cfg, s, true);
  checks.at_most("skew drift", skew_preservation(s, x0, cfg.integrator), cfg.tol.skew);
  Json extra;
  extra["family"] = std::string(family_name(family(s)));
  extra["variant"] = cfg.structure.variant;
  return extra;
}

std::string invariants_csv(const ChiralField& f, int jmax) {
  std::ostringstream os;
  os << "i,j,t,tau";
  for (const char* name : {"u", "v"})
    for (int p = 1; p <= jmax; ++p) os << ",tr_" << name << p << "_re,tr_" << name << p << "_im";
  os << '\n';
  for (std::size_t i = 0; i < f.grid.nt; ++i) {
    for (std::size_t j = 0; j < f.grid.ntau; ++j) {
      os << i << ',' << j << ',' << num(static_cast<double>(i) * f.grid.ht) << ','
         << num(static_cast<double>(j) * f.grid.htau);
      for (const auto* m : {&f.u_at(i, j), &f.v_at(i, j)})
        for (const cplx z : trace_powers(*m, jmax)) os << ',' << num(z.real()) << ',' << num(z.imag());
      os << '\n';
    }
  }
  return os.str();
}

Json run_chiral(const RunConfig& cfg, const fs::path& out, CheckList& checks) {
  const Structure s = build_structure(cfg.structure);
  const PMStructure& pm = require_pm2(s);
  require_generic(pm);
  const auto& ch = cfg.chiral;
  const std::size_t n = pm.n();
  const ChiralOperators ops = ch.identity_override ? identity_operators(n) : build_T1_T2(pm);
  if (!ch.identity_override)
    checks.at_most("decomposition", decomposition_residual(pm, ops, 3, cfg.check_seed), cfg.tol.decomposition);

  const std::size_t nodes = ch.setup.nodes;
  const double h = ch.setup.length / static_cast<double>(nodes - 1);
  const NearIdentityProfile pu(n, ch.seed_u, ch.amplitude), pv(n, ch.seed_v, ch.amplitude);
  std::vector<CMatrix> u0, v0;
  if (ch.commuting) {
    u0.assign(nodes, CMatrix::scalar(n, 1.0 + ch.amplitude));
    v0.assign(nodes, CMatrix::scalar(n, cplx(0.0, ch.amplitude)));
  } else {
    u0 = pu.sample(nodes, h);
    v0 = pv.sample(nodes, h);
  }
  const ChiralField base = chiral_integrate(ops, u0, v0, h, h);
  write_text(out / "invariants.csv", invariants_csv(base, ch.setup.jmax));
  if (ch.dump) write_binary(base, (out / "field.bin").string());

  Json extra;
  extra["n"] = n;
  extra["identity_override"] = ch.identity_override;
  extra["nodes"] = nodes;
  extra["h"] = h;

  if (ch.commuting) {
    double change = 0.0;
    for (std::size_t idx = 0; idx < base.u.size(); ++idx) {
      change = std::max(change, frobenius_norm(base.u[idx] - u0[0]));
      change = std::max(change, frobenius_norm(base.v[idx] - v0[0]));
    }
    checks.at_most("constant fields", change, cfg.tol.algebraic);
    checks.at_most("line drift", line_invariant_drift(base, ch.setup.jmax).max(), cfg.tol.conservation);
    if (!ch.identity_override)
      checks.at_most("curvature", curvature_residual(base, pm, ch.setup.lambda, cfg.dressing), cfg.tol.algebraic);
    return extra;
  }

  const auto study = refinement_study(pm, ops, pu, pv, ch.setup, cfg.dressing);
  std::ostringstream csv;
  csv << "nodes,h,drift,curvature,endpoint_change\n";
  Json table = Json::array();
  for (const auto& r : study.rows) {
    csv << r.nodes << ',' << num(r.h) << ',' << num(r.drift) << ',' << num(r.curvature) << ','
        << num(r.endpoint_change) << '\n';
    table.push_back({{"nodes", r.nodes}, {"h", r.h}, {"drift", r.drift}, {"curvature", r.curvature},
                     {"endpoint_change", r.endpoint_change}});
  }
  write_text(out / "refinement.csv", csv.str());
  const double band = cfg.tol.order_band;
  checks.within("drift order", study.drift_order, 2.0 - band, 2.0 + band);
  if (ch.setup.curvature) checks.within("curvature order", study.curvature_order, 2.0 - band, 2.0 + band);
  if (ch.setup.levels >= 3) checks.within("endpoint ratio", study.endpoint_ratio, cfg.tol.ratio_min, cfg.tol.ratio_max);
  extra["refinement"] = std::move(table);
  return extra;
}

RunResult run_sweep(const RunConfig& cfg, const fs::path& out) {
  struct Item {
    std::string key;
    Json value;
    RunResult result;
  };
  std::vector<Item> items(cfg.sweep.values.size());
  auto one = [&](std::size_t i) {
    Item& it = items[i];
    it.value = cfg.sweep.values[i];
    it.key = it.value.dump();
    std::ostringstream dir;
    dir << "run_" << std::setw(3) << std::setfill('0') << i;
    const fs::path sub = out / dir.str();
    try {
      Json merged = cfg.raw;
      apply_value(merged, cfg.sweep.key, it.value);
      merged["command"] = std::string(command_name(cfg.sweep.command));
      it.result = run(parse_config(merged), sub);
    } catch (const Error& e) {
      it.result.exit_code = is_numerical(e.code()) ? exit_code::numerical : exit_code::config_error;
      it.result.summary = {{"status", "error"}, {"error", e.what()}};
    }
    it.result.summary["directory"] = dir.str();
  };
  unsigned workers = cfg.sweep.workers ? cfg.sweep.workers : std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < items.size(); start += workers) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = start; i < std::min(items.size(), start + workers); ++i)
      batch.push_back(std::async(std::launch::async, one, i));
    for (auto& f : batch) f.get();
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.key < b.key; });

  RunResult res;
  Json runs = Json::array();
  for (auto& it : items) {
    res.exit_code = std::max(res.exit_code, it.result.exit_code);
    runs.push_back({{"key", it.key}, {"value", it.value}, {"exit_code", it.result.exit_code},
                    {"summary", std::move(it.result.summary)}});
  }
  res.summary["command"] = "sweep";
  res.summary["key"] = cfg.sweep.key;
  res.summary["sweep_command"] = std::string(command_name(cfg.sweep.command));
  res.summary["status"] = res.exit_code == exit_code::pass ? "pass" : "fail";
  res.summary["runs"] = std::move(runs);
  return res;
}

}  // namespace

void CheckList::at_most(std::string name, double value, double tolerance, std::optional<cplx> lambda) {
  checks_.push_back({std::move(name), lambda, value, tolerance, std::nullopt, std::isfinite(value) && value <= tolerance});
}

void CheckList::within(std::string name, double value, double lower, double upper) {
  checks_.push_back({std::move(name), std::nullopt, value, upper, lower, value >= lower && value <= upper});
}

bool CheckList::all_passed() const {
  return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.passed; });
}

Json CheckList::to_json() const {
  Json out = Json::array();
  for (const auto& c : checks_) {
    Json j;
    j["name"] = c.name;
    if (c.lambda) j["lambda"] = pencil::to_json(*c.lambda);
    j["value"] = c.value;
    if (c.lower) {
      j["lower"] = *c.lower;
      j["upper"] = c.tolerance;
    } else {
      j["tolerance"] = c.tolerance;
    }
    j["passed"] = c.passed;
    out.push_back(std::move(j));
  }
  return out;
}

FlowState initial_state(const RunConfig& cfg, const Structure& s, bool skew) {
  const std::size_t m = components(s), n = matrix_size(s);
  if (!cfg.initial.state.empty()) {
    FlowState x(cfg.initial.state);
    if (x.m() != m) throw Error(ErrorCode::ConfigError, "initial.state: expected " + std::to_string(m) + " matrices");
    for (const auto& p : x.parts)
      if (p.rows() != n) throw Error(ErrorCode::ConfigError, "initial.state: expected " + std::to_string(n) + " x " + std::to_string(n));
    return x;
  }
  SplitMix64 rng(cfg.initial.seed);
  FlowState x = random_state(m, n, rng);
  if (skew)
    for (auto& p : x.parts) p = p - p.transpose();
  x *= cfg.initial.scale;
  return x;
}

RunResult run(const RunConfig& cfg, const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::ConfigError, "cannot create " + out.string() + ": " + ec.message());

  RunResult res;
  if (cfg.command == Command::Sweep) {
    res = run_sweep(cfg, out);
  } else {
    CheckList checks;
    Json summary;
    summary["command"] = std::string(command_name(cfg.command));
    try {
      Json extra;
      switch (cfg.command) {
        case Command::Verify:
          extra = run_verify(cfg, checks);
          break;
        case Command::Integrate:
          summary["mode"] = cfg.mode;
          if (cfg.mode == "volterra") {
            extra = run_volterra(cfg, out, checks);
          } else if (cfg.mode == "skew") {
            extra = run_skew(cfg, checks);
          } else {
            extra = run_flow(cfg, out, checks);
          }
          break;
        case Command::Chiral:
          extra = run_chiral(cfg, out, checks);
          break;
        case Command::Sweep:
          break;
      }
      res.exit_code = checks.all_passed() ? exit_code::pass : exit_code::check_failed;
      summary["status"] = res.exit_code == exit_code::pass ? "pass" : "fail";
      summary["checks"] = checks.to_json();
      for (auto& [key, value] : extra.items()) summary[key] = value;
    } catch (const Error& e) {
      res.exit_code = is_numerical(e.code()) ? exit_code::numerical : exit_code::config_error;
      summary["status"] = res.exit_code == exit_code::numerical ? "numerical_singularity" : "error";
      summary["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
      summary["checks"] = checks.to_json();
    }
    summary["config"] = cfg.raw;
    res.summary = std::move(summary);
  }
  write_text(out / "summary.json", res.summary.dump(2) + "\n");
  return res;
}

}  // namespace pencil
