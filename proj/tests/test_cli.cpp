#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pencil/errors.hpp"
#include "pencil/runner.hpp"

using namespace pencil;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("pencil_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(PENCIL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int cli(const std::string& command, const fs::path& config, const std::string& out, const std::string& sets = "") {
  return cli(command + " --config " + config.string() + " " + sets + " --out " + (scratch() / out).string());
}

Json summary(const std::string& out) { return Json::parse(slurp(scratch() / out / "summary.json")); }

const fs::path& empty_config() {
  static const fs::path p = write_config("empty.json", "{}");
  return p;
}

}  // namespace

TEST_CASE("config overlay and diagnostics") {
  Json base = default_config();
  overlay_config(base, Json::parse(R"({"structure": {"family": "a3", "n": 4}})"));
  CHECK(base["structure"]["n"] == 4);
  CHECK(base["structure"]["k"] == 2);

  try {
    overlay_config(base, Json::parse(R"({"integrator": {"dtt": 0.1}})"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("integrator.dtt") != std::string::npos);
  }
  CHECK_THROWS_AS(overlay_config(base, Json::parse(R"({"integrator": {"dt": "small"}})")), Error);

  apply_assignment(base, "structure.family=ak");
  apply_assignment(base, "integrator.sign=-1");
  apply_assignment(base, "lambda_samples=[[0.2, 0.1]]");
  const auto cfg = parse_config(base);
  CHECK(cfg.structure.family == Family::Ak);
  CHECK(cfg.integrator.sign == -1);
  REQUIRE(cfg.lambdas.size() == 1);
  CHECK(cfg.lambdas[0] == cplx(0.2, 0.1));
  CHECK_THROWS_AS(apply_assignment(base, "no_equals_sign"), Error);

  apply_assignment(base, "integrator.sign=2");
  CHECK_THROWS_AS(parse_config(base), Error);

  const fs::path bad = write_config("bad.json", "{\n  \"structure\": {\n    \"n\": 3,,\n  }\n}\n");
  try {
    read_json_file(bad.string());
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("structures from config") {
  Json base = default_config();
  apply_assignment(base, "structure.family=a3");
  apply_assignment(base, "structure.variant=canonical");
  apply_assignment(base, "structure.n=4");
  apply_assignment(base, "structure.p=2");
  const auto s = build_structure(parse_config(base).structure);
  CHECK(skew_constraint_residual(s) == 0.0);
  apply_assignment(base, "structure.variant=clock");
  CHECK_THROWS_AS(parse_config(base), Error);
}

TEST_CASE("verify exit status") {
  const auto pair = write_config("a3pair.json", R"({"structure": {"family": "a3", "variant": "block_pair", "n": 4}})");
  CHECK(cli("verify", pair, "a3pair") == 0);
  const auto s = summary("a3pair");
  CHECK(s["status"] == "pass");
  CHECK(s["checks"].size() > 20);

  CHECK(cli("verify", pair, "a3broken", "--set structure.perturb_b=1e-3") == 1);
  bool relation_failed = false;
  const auto broken = summary("a3broken");
  for (const auto& c : broken["checks"])
    if (c["name"].get<std::string>().rfind("relation", 0) == 0 && !c["passed"].get<bool>()) relation_failed = true;
  CHECK(relation_failed);

  CHECK(cli("verify", pair, "empty", "--set 'lambda_samples=[]'") == 2);
  CHECK(cli("verify", pair, "unknown", "--set structure.colour=1") == 2);
  CHECK(cli("verify", write_config("typo.json", R"({"structur": {}})"), "typo") == 2);
  CHECK(cli("verify --out " + (scratch() / "nocfg").string()) == 2);

  // A3 at its branch point is a numerical singularity.
  CHECK(cli("verify", pair, "branch", "--set 'lambda_samples=[[0.5, 0]]'") == 3);
  CHECK(summary("branch")["status"] == "numerical_singularity");

  for (const char* fam : {"a1", "ak", "pm"}) {
    CHECK(cli("verify", empty_config(), std::string("v_") + fam, std::string("--set structure.family=") + fam +
                                                                     " --set structure.d=2") == 0);
  }
}

TEST_CASE("integrate") {
  CHECK(cli("integrate", empty_config(), "a1") == 0);
  const auto s = summary("a1");
  for (const auto& [label, drift] : s["drift"].items()) CHECK(drift.get<double>() < 1e-8);
  const std::string csv = slurp(scratch() / "a1" / "conservation.csv");
  CHECK(csv.rfind("t,H_re,H_im,H_1_0_re", 0) == 0);

  CHECK(cli("integrate", empty_config(), "volterra", "--set mode=volterra --set integrator.steps=500") == 0);
  const auto v = summary("volterra");
  CHECK(v["checks"][0]["value"].get<double>() < 1e-8);
  CHECK(v["final_time"].get<double>() == doctest::Approx(0.5));
  CHECK(fs::exists(scratch() / "volterra" / "volterra.csv"));

  CHECK(cli("integrate", empty_config(), "skew",
            "--set mode=skew --set structure.family=a3 --set structure.variant=canonical --set structure.n=4 "
            "--set structure.p=1") == 0);
  CHECK(cli("integrate", empty_config(), "skew_bad", "--set mode=skew --set structure.family=a3") == 2);

  CHECK(cli("integrate", empty_config(), "blowup", "--set integrator.blowup=1e-3") == 3);
}

TEST_CASE("sign -1 run retraces the sign +1 run") {
  const std::string common = "--set structure.family=a3 --set structure.n=4";
  REQUIRE(cli("integrate", empty_config(), "forward", common) == 0);
  const auto fwd = summary("forward");
  Json back_cfg = Json::object();
  back_cfg["initial"]["state"] = fwd["final_state"];
  back_cfg["integrator"]["sign"] = -1;
  const auto back_path = write_config("back.json", back_cfg.dump());
  REQUIRE(cli("integrate", back_path, "backward", common) == 0);
  const auto back = summary("backward");

  double worst = 0.0;
  const auto& x0 = fwd["initial_state"][0];
  const auto& x1 = back["final_state"][0];
  for (std::size_t r = 0; r < x0.size(); ++r)
    for (std::size_t c = 0; c < x0.size(); ++c)
      for (std::size_t part = 0; part < 2; ++part)
        worst = std::max(worst, std::abs(x0[r][c][part].get<double>() - x1[r][c][part].get<double>()));
  CHECK(worst < 1e-8);
}

TEST_CASE("chiral") {
  const std::string pm = "--set structure.family=pm --set structure.d=2";
  CHECK(cli("chiral", empty_config(), "chiral", pm) == 0);
  const auto s = summary("chiral");
  CHECK(s["refinement"].size() == 3);
  CHECK(fs::exists(scratch() / "chiral" / "refinement.csv"));
  CHECK(fs::file_size(scratch() / "chiral" / "field.bin") == 24 + 2 * 51 * 51 * 16 * 16);

  CHECK(cli("chiral", empty_config(), "chiral_id", pm + " --set chiral.identity_override=true") == 0);

  CHECK(cli("chiral", empty_config(), "chiral_c", pm + " --set chiral.commuting=true --set chiral.dump=false") == 0);
  // every invariant column is constant
  std::ifstream in(scratch() / "chiral_c" / "invariants.csv");
  std::string header, first, line;
  std::getline(in, header);
  std::getline(in, first);
  auto tail = [](const std::string& row) {
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) pos = row.find(',', pos) + 1;
    return row.substr(pos);
  };
  bool constant = true;
  while (std::getline(in, line)) constant = constant && tail(line) == tail(first);
  CHECK(constant);

  CHECK(cli("chiral", empty_config(), "chiral_a1") == 2);
}

TEST_CASE("sweep and determinism") {
  const auto cfg = write_config("sweep.json", R"({"structure": {"family": "a3", "n": 4},
    "sweep": {"key": "structure.seed", "values": [3, 1, 2], "command": "verify", "workers": 3}})");
  REQUIRE(cli("sweep", cfg, "sweep1") == 0);
  REQUIRE(cli("sweep", cfg, "sweep2", "--set sweep.workers=1") == 0);
  const auto s = summary("sweep1");
  REQUIRE(s["runs"].size() == 3);
  CHECK(s["runs"][0]["key"] == "1");
  CHECK(s["runs"][2]["key"] == "3");
  CHECK(fs::exists(scratch() / "sweep1" / "run_000" / "summary.json"));

  // Worker count is a scheduling detail; only it differs in the echoed config.
  auto strip = [](Json j) {
    for (auto& r : j["runs"]) r["summary"].erase("config");
    return j.dump();
  };
  CHECK(strip(s) == strip(summary("sweep2")));

  REQUIRE(cli("integrate", empty_config(), "det1") == 0);
  REQUIRE(cli("integrate", empty_config(), "det2") == 0);
  CHECK(slurp(scratch() / "det1" / "summary.json") == slurp(scratch() / "det2" / "summary.json"));
  CHECK(slurp(scratch() / "det1" / "conservation.csv") == slurp(scratch() / "det2" / "conservation.csv"));

  const auto bad = write_config("sweep_bad.json", R"({"sweep": {"key": "structure.nope", "values": [1]}})");
  CHECK(cli("sweep", bad, "sweep_bad") == 2);
}
