#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmel/runner.hpp"
#include "pmel/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pmel: porous-medium equation laboratory"};
  app.set_version_flag("--version", std::string(PMEL_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  CLI::App* run_cmd = app.add_subcommand("run", "run one configured experiment");
  run_cmd->add_option("config", config_path, "INI config file")->required();
  run_cmd->add_option("--set", overrides, "override a key, e.g. --set solver.dt=1e-4")
      ->type_name("SECTION.KEY=VALUE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return pmel::run(config_path, overrides);
}
