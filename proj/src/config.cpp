#include "pencil/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ConfigError, field.empty() ? what : field + ": " + what);
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

const Json& at(const Json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(join(where, key), "missing");
  return j.at(key);
}

double get_double(const Json& j, const std::string& where, const char* key) {
  const Json& v = at(j, where, key);
  if (!v.is_number()) fail(join(where, key), "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const Json& j, const std::string& where, const char* key) {
  const Json& v = at(j, where, key);
  if (!v.is_number_integer()) fail(join(where, key), "expected an integer");
  return v.get<std::int64_t>();
}

std::size_t get_count(const Json& j, const std::string& where, const char* key, std::size_t min = 0) {
  const auto v = get_int(j, where, key);
  if (v < static_cast<std::int64_t>(min)) fail(join(where, key), "must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::uint64_t get_seed(const Json& j, const std::string& where, const char* key) {
  const Json& v = at(j, where, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    fail(join(where, key), "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const Json& j, const std::string& where, const char* key) {
  const Json& v = at(j, where, key);
  if (!v.is_string()) fail(join(where, key), "expected a string");
  return v.get<std::string>();
}

bool get_bool(const Json& j, const std::string& where, const char* key) {
  const Json& v = at(j, where, key);
  if (!v.is_boolean()) fail(join(where, key), "expected true or false");
  return v.get<bool>();
}

cplx as_complex(const Json& v, const std::string& field) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  fail(field, "expected [re, im]");
}

std::vector<cplx> complex_list(const Json& j, const std::string& where, const char* key) {
  const Json& v = at(j, where, key);
  if (!v.is_array()) fail(join(where, key), "expected a list of [re, im]");
  std::vector<cplx> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_complex(v[i], join(where, key) + "[" + std::to_string(i) + "]"));
  return out;
}

CMatrix as_matrix(const Json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) fail(field, "expected a non-empty list of rows");
  const std::size_t n = v.size();
  CMatrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!v[r].is_array() || v[r].size() != n) fail(field, "expected a square matrix");
    for (std::size_t c = 0; c < n; ++c)
      m(r, c) = as_complex(v[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

int get_sign(const Json& j, const std::string& where) {
  const auto s = get_int(j, where, "sign");
  if (s != 1 && s != -1) fail(join(where, "sign"), "must be +1 or -1");
  return static_cast<int>(s);
}

Family parse_family(const std::string& name) {
  if (name == "a1") return Family::A1;
  if (name == "a3") return Family::A3;
  if (name == "ak") return Family::Ak;
  if (name == "pm") return Family::PM;
  fail("structure.family", "unknown family '" + name + "' (a1, a3, ak, pm)");
}

std::string default_variant(Family f) {
  switch (f) {
    case Family::A1:
    case Family::A3:
      return "random";
    case Family::Ak:
    case Family::PM:
      return "clock";
  }
  return "";
}

void check_variant(Family f, const std::string& v) {
  const std::vector<std::string> allowed = [&]() -> std::vector<std::string> {
    switch (f) {
      case Family::A1:
        return {"random", "identity"};
      case Family::A3:
        return {"random", "canonical", "block_pair"};
      case Family::Ak:
        return {"clock", "skew"};
      case Family::PM:
        return {"clock"};
    }
    return {};
  }();
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail("structure.variant", "'" + v + "' is not a " + std::string(family_name(f)) + " variant (" + list + ")");
  }
}

CMatrix perturbed(const CMatrix& b, const StructureSpec& spec) {
  if (spec.perturb_b == 0.0) return b;
  SplitMix64 rng(spec.perturb_seed);
  return b + spec.perturb_b * random_matrix(b.rows(), b.cols(), rng);
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "verify") return Command::Verify;
  if (name == "integrate") return Command::Integrate;
  if (name == "sweep") return Command::Sweep;
  if (name == "chiral") return Command::Chiral;
  fail("command", "unknown command '" + std::string(name) + "'");
}

std::string_view command_name(Command c) {
  switch (c) {
    case Command::Verify:
      return "verify";
    case Command::Integrate:
      return "integrate";
    case Command::Sweep:
      return "sweep";
    case Command::Chiral:
      return "chiral";
  }
  return "?";
}

Json default_config() {
  return Json::parse(R"({
  "command": "verify",
  "structure": {
    "family": "a1",
    "variant": "",
    "n": 3,
    "k": 2,
    "m": 2,
    "d": 1,
    "seed": 1,
    "p": 1,
    "alphas": [],
    "lambdas": [[1.0, 0.0], [2.0, 0.0]],
    "weights": [[0.3, 0.0], [0.5, 0.0]],
    "z1": [0.3, 0.0],
    "perturb_b": 0.0,
    "perturb_seed": 99
  },
  "lambda_samples": [[0.1, 0.0], [0.0, 0.2], [-0.15, 0.05], [0.25, 0.0], [0.1, -0.3]],
  "dressing": {"inner": 0.05, "outer": 0.4},
  "integrator": {"dt": 0.001, "steps": 1000, "sign": 1, "record_every": 10, "blowup": 1e8},
  "mode": "flow",
  "initial": {"seed": 7, "scale": 0.3, "state": []},
  "volterra": {"blocks": 3, "block_size": 1, "seed": 5, "amplitude": 0.5},
  "chiral": {
    "nodes": 51,
    "levels": 3,
    "length": 1.0,
    "amplitude": 0.6,
    "seed_u": 11,
    "seed_v": 12,
    "lambda": [0.2, 0.0],
    "identity_override": false,
    "commuting": false,
    "dump": true
  },
  "sweep": {"key": "structure.seed", "values": [1, 2, 3], "command": "verify", "workers": 0},
  "tolerances": {
    "conservation": 1e-8,
    "algebraic": 1e-9,
    "gradient": 1e-5,
    "dressing": 1e-8,
    "lax": 1e-8,
    "mu": 1e-12,
    "volterra": 1e-8,
    "off_pattern": 1e-10,
    "skew": 1e-8,
    "decomposition": 1e-6,
    "order_band": 0.3,
    "ratio_min": 3.0,
    "ratio_max": 5.0
  },
  "checks": {"samples": 10, "seed": 0, "jmax": 3, "grad_entries": 20}
})");
}

void overlay_config(Json& base, const Json& overlay, const std::string& where) {
  if (!overlay.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string field = join(where, key);
    if (!base.contains(key)) fail(field, "unknown field");
    Json& slot = base[key];
    if (!same_kind(slot, value)) fail(field, std::string("expected ") + slot.type_name() + ", got " + value.type_name());
    if (slot.is_object()) {
      overlay_config(slot, value, field);
    } else {
      slot = value;
    }
  }
}

void apply_assignment(Json& base, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) fail("--set", "expected key=value, got '" + std::string(assignment) + "'");
  const std::string text(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  apply_value(base, std::string(assignment.substr(0, eq)), value);
}

void apply_value(Json& base, const std::string& path, const Json& value) {
  // Build the nested overlay {"a": {"b": value}} so one code path checks keys.
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) fail(path, "empty path component");
    parts.push_back(part);
  }
  Json overlay = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) overlay = Json{{*it, overlay}};
  overlay_config(base, overlay);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("--config", "cannot open '" + path + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    fail(path, e.what());
  }
}

RunConfig parse_config(const Json& j) {
  RunConfig c;
  c.raw = j;
  c.command = parse_command(get_string(j, "", "command"));

  const Json& s = at(j, "", "structure");
  auto& st = c.structure;
  st.family = parse_family(get_string(s, "structure", "family"));
  st.variant = get_string(s, "structure", "variant");
  if (st.variant.empty()) st.variant = default_variant(st.family);
  check_variant(st.family, st.variant);
  st.n = get_count(s, "structure", "n", 1);
  st.k = static_cast<int>(get_count(s, "structure", "k", 1));
  st.m = get_count(s, "structure", "m", 1);
  st.d = get_count(s, "structure", "d", 1);
  st.seed = get_seed(s, "structure", "seed");
  st.p = get_count(s, "structure", "p", 1);
  st.alphas = complex_list(s, "structure", "alphas");
  st.lambdas = complex_list(s, "structure", "lambdas");
  st.weights = complex_list(s, "structure", "weights");
  st.z1 = as_complex(at(s, "structure", "z1"), "structure.z1");
  st.perturb_b = get_double(s, "structure", "perturb_b");
  st.perturb_seed = get_seed(s, "structure", "perturb_seed");
  if (st.family == Family::PM) {
    if (st.lambdas.size() != st.m || st.weights.size() != st.m)
      fail("structure.lambdas", "pm needs m lambdas and m weights");
  }

  c.lambdas = complex_list(j, "", "lambda_samples");
  if (c.lambdas.empty()) fail("lambda_samples", "must not be empty");
  for (const cplx l : c.lambdas)
    if (l == cplx{}) fail("lambda_samples", "lambda = 0 is not a sample point");

  const Json& dr = at(j, "", "dressing");
  c.dressing.inner = get_double(dr, "dressing", "inner");
  c.dressing.outer = get_double(dr, "dressing", "outer");
  if (!(c.dressing.inner >= 0.0 && c.dressing.outer > c.dressing.inner))
    fail("dressing", "need 0 <= inner < outer");

  const Json& in = at(j, "", "integrator");
  c.integrator.dt = get_double(in, "integrator", "dt");
  c.integrator.steps = static_cast<int>(get_count(in, "integrator", "steps"));
  c.integrator.sign = get_sign(in, "integrator");
  c.integrator.record_every = static_cast<int>(get_count(in, "integrator", "record_every", 1));
  c.integrator.blowup = get_double(in, "integrator", "blowup");
  try {
    validate(c.integrator);
  } catch (const Error& e) {
    fail("integrator", e.what());
  }
  if (c.integrator.dt * c.integrator.steps > 10.0) fail("integrator", "dt * steps exceeds 10 time units");

  c.mode = get_string(j, "", "mode");
  if (c.mode != "flow" && c.mode != "volterra" && c.mode != "skew")
    fail("mode", "expected flow, volterra or skew");

  const Json& ini = at(j, "", "initial");
  c.initial.seed = get_seed(ini, "initial", "seed");
  c.initial.scale = get_double(ini, "initial", "scale");
  const Json& state = at(ini, "initial", "state");
  for (std::size_t a = 0; a < state.size(); ++a)
    c.initial.state.push_back(as_matrix(state[a], "initial.state[" + std::to_string(a) + "]"));

  const Json& vo = at(j, "", "volterra");
  c.volterra.blocks = get_count(vo, "volterra", "blocks", 3);
  c.volterra.block_size = get_count(vo, "volterra", "block_size", 1);
  c.volterra.seed = get_seed(vo, "volterra", "seed");
  c.volterra.amplitude = get_double(vo, "volterra", "amplitude");

  const Json& ch = at(j, "", "chiral");
  c.chiral.setup.nodes = get_count(ch, "chiral", "nodes", 3);
  c.chiral.setup.levels = static_cast<int>(get_count(ch, "chiral", "levels", 2));
  c.chiral.setup.length = get_double(ch, "chiral", "length");
  if (!(c.chiral.setup.length > 0.0)) fail("chiral.length", "must be positive");
  c.chiral.amplitude = get_double(ch, "chiral", "amplitude");
  c.chiral.seed_u = get_seed(ch, "chiral", "seed_u");
  c.chiral.seed_v = get_seed(ch, "chiral", "seed_v");
  c.chiral.setup.lambda = as_complex(at(ch, "chiral", "lambda"), "chiral.lambda");
  c.chiral.identity_override = get_bool(ch, "chiral", "identity_override");
  c.chiral.commuting = get_bool(ch, "chiral", "commuting");
  c.chiral.dump = get_bool(ch, "chiral", "dump");
  c.chiral.setup.curvature = !c.chiral.identity_override;

  const Json& sw = at(j, "", "sweep");
  c.sweep.key = get_string(sw, "sweep", "key");
  const Json& vals = at(sw, "sweep", "values");
  c.sweep.values.assign(vals.begin(), vals.end());
  c.sweep.command = parse_command(get_string(sw, "sweep", "command"));
  if (c.sweep.command == Command::Sweep) fail("sweep.command", "sweeps do not nest");
  c.sweep.workers = static_cast<unsigned>(get_count(sw, "sweep", "workers"));
  if (c.command == Command::Sweep && c.sweep.values.empty()) fail("sweep.values", "must not be empty");

  const Json& t = at(j, "", "tolerances");
  auto tol = [&](const char* key) {
    const double v = get_double(t, "tolerances", key);
    if (!(v > 0.0)) fail(join("tolerances", key), "must be positive");
    return v;
  };
  c.tol.conservation = tol("conservation");
  c.tol.algebraic = tol("algebraic");
  c.tol.gradient = tol("gradient");
  c.tol.dressing = tol("dressing");
  c.tol.lax = tol("lax");
  c.tol.mu = tol("mu");
  c.tol.volterra = tol("volterra");
  c.tol.off_pattern = tol("off_pattern");
  c.tol.skew = tol("skew");
  c.tol.decomposition = tol("decomposition");
  c.tol.order_band = tol("order_band");
  c.tol.ratio_min = tol("ratio_min");
  c.tol.ratio_max = tol("ratio_max");

  const Json& ck = at(j, "", "checks");
  c.samples = static_cast<int>(get_count(ck, "checks", "samples", 1));
  c.check_seed = get_seed(ck, "checks", "seed");
  c.jmax = static_cast<int>(get_count(ck, "checks", "jmax", 1));
  c.grad_entries = static_cast<int>(get_count(ck, "checks", "grad_entries", 1));
  c.chiral.setup.jmax = c.jmax;
  return c;
}

RunConfig load_run_config(Command command, const std::string& path, const std::vector<std::string>& assignments) {
  Json merged = default_config();
  if (!path.empty()) overlay_config(merged, read_json_file(path));
  for (const auto& a : assignments) apply_assignment(merged, a);
  merged["command"] = std::string(command_name(command));
  return parse_config(merged);
}

Structure build_structure(const StructureSpec& spec) {
  switch (spec.family) {
    case Family::A1: {
      if (spec.perturb_b != 0.0) fail("structure.perturb_b", "a1 has no B");
      if (spec.variant == "identity") return A1Structure{CMatrix::identity(spec.n)};
      return A1Structure{random_matrix(spec.n, spec.seed)};
    }
    case Family::A3: {
      if (spec.variant == "canonical") {
        if (2 * spec.p > spec.n) fail("structure.p", "need 2p <= n");
        std::vector<cplx> alphas = spec.alphas;
        if (alphas.empty()) alphas.assign(spec.p, 1.0);
        auto s = a3_skew_structure(involution_canonical(spec.n, spec.p, alphas));
        s.b = perturbed(s.b, spec);
        return s;
      }
      InvolutionPair pair;
      if (spec.variant == "block_pair") {
        if (spec.n % 2 != 0) fail("structure.n", "block_pair needs even n");
        pair = a3_block_pair(random_matrix(spec.n / 2, spec.seed));
      } else {
        pair = a3_random_pair(spec.n, spec.seed);
      }
      return A3Structure{pair.a, perturbed(pair.b, spec)};
    }
    case Family::Ak: {
      if (spec.k < 2) fail("structure.k", "ak needs k >= 2");
      AkStructure s = spec.variant == "skew" ? ak_skew_structure(spec.k, skew_ak(spec.k, spec.z1).a)
                                             : make_ak(spec.k, spec.d, spec.seed);
      s.b = perturbed(s.b, spec);
      return s;
    }
    case Family::PM: {
      PMStructure s = make_pm(spec.k, spec.d, spec.seed, spec.lambdas, spec.weights);
      s.b = perturbed(s.b, spec);
      return s;
    }
  }
  fail("structure.family", "unhandled family");
}

Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const FlowState& x) {
  Json out = Json::array();
  for (const auto& p : x.parts) out.push_back(to_json(p));
  return out;
}

}  // namespace pencil
