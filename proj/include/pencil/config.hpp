#pragma once

// Run configuration for the command-line driver. A config file is a JSON
// object overlaid on default_config(); every key must already exist in the
// defaults and keep its JSON type. Complex numbers are [re, im] pairs and
// matrices are lists of rows of such pairs.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pencil/chiral.hpp"
#include "pencil/dressing.hpp"
#include "pencil/flows.hpp"
#include "pencil/structures.hpp"

namespace pencil {

using Json = nlohmann::ordered_json;

enum class Command { Verify, Integrate, Sweep, Chiral };

Command parse_command(std::string_view name);
std::string_view command_name(Command c);

struct StructureSpec {
  Family family = Family::A1;
  /// a1: random | identity; a3: random | canonical | block_pair; ak: clock | skew; pm: clock
  std::string variant;
  std::size_t n = 3;
  int k = 2;
  std::size_t m = 2;
  std::size_t d = 1;
  std::uint64_t seed = 1;
  std::size_t p = 1;
  std::vector<cplx> alphas;
  std::vector<cplx> lambdas;
  std::vector<cplx> weights;
  cplx z1;
  /// B += perturb_b * random, for probing the checks
  double perturb_b = 0.0;
  std::uint64_t perturb_seed = 99;
};

struct Tolerances {
  double conservation = 1e-8;
  double algebraic = 1e-9;
  double gradient = 1e-5;
  double dressing = 1e-8;
  double lax = 1e-8;
  double mu = 1e-12;
  double volterra = 1e-8;
  double off_pattern = 1e-10;
  double skew = 1e-8;
  double decomposition = 1e-6;
  /// measured orders must lie within 2 +- order_band
  double order_band = 0.3;
  double ratio_min = 3.0;
  double ratio_max = 5.0;
};

struct InitialSpec {
  std::uint64_t seed = 7;
  double scale = 0.3;
  /// explicit x0; overrides seed and scale when non-empty
  std::vector<CMatrix> state;
};

struct VolterraSpec {
  std::size_t blocks = 3;
  std::size_t block_size = 1;
  std::uint64_t seed = 5;
  double amplitude = 0.5;
};

struct ChiralSpec {
  RefinementSetup setup;
  double amplitude = 0.6;
  std::uint64_t seed_u = 11;
  std::uint64_t seed_v = 12;
  bool identity_override = false;
  /// scalar-multiple-of-identity initial lines
  bool commuting = false;
  bool dump = true;
};

struct SweepSpec {
  std::string key;
  std::vector<Json> values;
  Command command = Command::Verify;
  unsigned workers = 0;
};

struct RunConfig {
  Command command = Command::Verify;
  StructureSpec structure;
  std::vector<cplx> lambdas;
  DressingOptions dressing;
  IntegratorConfig integrator;
  /// integrate: flow | volterra | skew
  std::string mode = "flow";
  InitialSpec initial;
  VolterraSpec volterra;
  ChiralSpec chiral;
  SweepSpec sweep;
  Tolerances tol;
  int samples = 10;
  std::uint64_t check_seed = 0;
  int jmax = 3;
  int grad_entries = 20;
  /// the merged document this was parsed from
  Json raw;
};

Json default_config();

/// Copies the entries of `overlay` into `base`, rejecting keys absent from
/// `base` and type changes. `where` prefixes field names in diagnostics.
void overlay_config(Json& base, const Json& overlay, const std::string& where = "");

/// Sets the dotted path `path` to `value` through overlay_config.
void apply_value(Json& base, const std::string& path, const Json& value);

/// Applies "a.b.c=value"; value is parsed as JSON, falling back to a string.
void apply_assignment(Json& base, std::string_view assignment);

Json read_json_file(const std::string& path);

/// Typed view of a merged document. Throws ConfigError naming the field.
RunConfig parse_config(const Json& merged);

/// defaults <- file <- assignments, then parse. The command argument wins
/// over a "command" entry in the file.
RunConfig load_run_config(Command command, const std::string& path, const std::vector<std::string>& assignments);

Structure build_structure(const StructureSpec& spec);

Json to_json(cplx z);
Json to_json(const CMatrix& m);
Json to_json(const FlowState& x);

}  // namespace pencil
