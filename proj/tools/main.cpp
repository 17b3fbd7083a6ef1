// Command line front end: run experiment configs, validate them, or
// regenerate the built-in figure datasets.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "ibrd/experiment.hpp"

namespace {

int execute(const ibrd::ExperimentConfig& config) {
  const ibrd::RunResult result = ibrd::run_experiment(config);
  for (const std::string& msg : result.messages)
    std::fprintf(stderr, "%s\n", msg.c_str());
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate-distortion experiments for compressed statistics"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "path to a JSON config")->required();

  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", validate_path, "path to a JSON config")
      ->required();

  std::string figure_name;
  CLI::App* figures =
      app.add_subcommand("figures", "run a built-in figure preset");
  figures->add_option("name", figure_name, "preset name, or 'list'")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return execute(ibrd::load_config(config_path));
    }
    if (validate->parsed()) {
      const ibrd::ExperimentConfig config = ibrd::load_config(validate_path);
      std::printf("ok: %s experiment on %s\n", config.experiment.c_str(),
                  config.model_id.c_str());
      return 0;
    }
    if (figures->parsed()) {
      if (figure_name == "list") {
        for (const std::string& name : ibrd::preset_names())
          std::printf("%s\n", name.c_str());
        return 0;
      }
      return execute(ibrd::parse_config(ibrd::preset_config_text(figure_name)));
    }
  } catch (const ibrd::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
