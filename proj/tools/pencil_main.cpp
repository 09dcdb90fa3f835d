#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pencil/errors.hpp"
#include "pencil/runner.hpp"

namespace {

void print_checks(const pencil::Json& summary) {
  if (!summary.contains("checks")) return;
  for (const auto& c : summary["checks"]) {
    std::cout << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>();
    if (c.contains("lambda")) std::cout << " @ (" << c["lambda"][0] << ", " << c["lambda"][1] << ")";
    std::cout << "  " << c["value"];
    if (c.contains("lower")) {
      std::cout << " in [" << c["lower"] << ", " << c["upper"] << "]";
    } else {
      std::cout << " <= " << c["tolerance"];
    }
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compatible matrix products, their Lax flows and the deformed chiral model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> assignments;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"verify", "Run the algebraic and dressing check suite"},
      {"integrate", "Integrate a flow and report conserved quantities"},
      {"sweep", "Repeat a command over values of one config key"},
      {"chiral", "Integrate the two-field chiral system on refined grids"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", assignments, "Override one field, key.path=value (repeatable)")
        ->allow_extra_args(false);
    sub->add_option("--out", out_dir, "Output directory")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pencil::exit_code::config_error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = pencil::load_run_config(pencil::parse_command(command), config_path, assignments);
    const auto res = pencil::run(cfg, out_dir);
    if (command == "sweep") {
      for (const auto& r : res.summary["runs"])
        std::cout << r["key"].get<std::string>() << ": exit " << r["exit_code"] << '\n';
    } else {
      print_checks(res.summary);
      if (res.summary.contains("error")) std::cerr << res.summary["error"]["message"].get<std::string>() << '\n';
    }
    std::cout << "status: " << res.summary["status"].get<std::string>() << '\n';
    return res.exit_code;
  } catch (const pencil::Error& e) {
    std::cerr << e.what() << '\n';
    return pencil::is_numerical(e.code()) ? pencil::exit_code::numerical : pencil::exit_code::config_error;
  }
}
