#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eitrecon/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pixelwise EIT reconstruction by monotonicity tests"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_command = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--override", overrides, "key=value applied after the config file");
    return sub;
  };
  CLI::App* validate = add_command("validate", "check the pixel ordering");
  CLI::App* simulate = add_command("simulate", "forward-simulate a phantom and write an ND matrix");
  CLI::App* reconstruct = add_command("reconstruct", "reconstruct pixel values from an ND matrix");
  CLI::App* msweep = add_command("msweep", "smallest eigenvalue of the test difference versus M");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? eitrecon::kSuccess : eitrecon::kInvalidInput;
  }

  try {
    eitrecon::RunConfig cfg = eitrecon::load_config(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (validate->parsed()) return eitrecon::cmd_validate(cfg, std::cout);
    if (simulate->parsed()) return eitrecon::cmd_simulate(cfg, std::cout);
    if (reconstruct->parsed()) return eitrecon::cmd_reconstruct(cfg, std::cout);
    if (msweep->parsed()) return eitrecon::cmd_msweep(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return eitrecon::exit_code_for(e);
  }
  return eitrecon::kInvalidInput;
}
