#pragma once

// The verify / integrate / sweep / chiral drivers behind the command line.
// Each writes summary.json (and CSV files) into the output directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pencil/config.hpp"

namespace pencil {

namespace exit_code {
inline constexpr int pass = 0;
inline constexpr int check_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int numerical = 3;
}  // namespace exit_code

struct Check {
  std::string name;
  std::optional<cplx> lambda;
  double value = 0.0;
  /// value <= tolerance, or value in [lower, upper] when lower is set
  double tolerance = 0.0;
  std::optional<double> lower;
  bool passed = false;
};

class CheckList {
 public:
  void at_most(std::string name, double value, double tolerance, std::optional<cplx> lambda = {});
  void within(std::string name, double value, double lower, double upper);

  bool all_passed() const;
  const std::vector<Check>& checks() const { return checks_; }
  Json to_json() const;

 private:
  std::vector<Check> checks_;
};

struct RunResult {
  int exit_code = exit_code::pass;
  Json summary;
};

/// Runs the configured command and writes summary.json into `out`. Library
/// errors are turned into exit codes 2 (misuse) or 3 (numerical singularity)
/// with the error recorded in the summary.
RunResult run(const RunConfig& cfg, const std::filesystem::path& out);

/// The initial state used by verify and integrate.
FlowState initial_state(const RunConfig& cfg, const Structure& s, bool skew);

}  // namespace pencil
