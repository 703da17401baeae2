#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdio>
#include <string>

#include "bsv/pipeline.hpp"
#include "bsv/propagator.hpp"

namespace {

bsv::ExperimentConfig load(const std::string& config_arg) {
  if (bsv::is_preset(config_arg)) return bsv::preset_config(config_arg);
  return bsv::load_config(config_arg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-domain engineering of bright squeezed vacuum"};
  app.require_subcommand(1);

  std::string config_arg, out_dir;
  int workers = 0;
  bool deterministic = false, render = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_arg, "preset name or config file path")->required();
    cmd->add_option("--out", out_dir, "output directory (must be empty)")->required();
    cmd->add_option("--workers", workers, "linear-algebra thread count");
    cmd->add_flag("--deterministic", deterministic,
                  "zero recorded timings so reruns are bit-identical");
    cmd->add_flag("--render", render, "also write PGM heatmaps");
  };
  CLI::App* cmd_run = app.add_subcommand("run", "design, propagate, analyze, export");
  add_common(cmd_run);
  CLI::App* cmd_jsi = app.add_subcommand("jsi", "phase-matching function and JSI only");
  add_common(cmd_jsi);
  CLI::App* cmd_conv = app.add_subcommand("convergence", "solver and grid self-convergence report");
  add_common(cmd_conv);
  CLI::App* cmd_list = app.add_subcommand("list-presets", "print bundled experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (cmd_list->parsed()) {
    for (const auto& name : bsv::preset_names()) std::puts(name.c_str());
    return 0;
  }

  try {
    bsv::ExperimentConfig config = load(config_arg);
    if (deterministic) config.deterministic = true;
    if (render) config.render = true;
    if (workers > 0) config.workers = workers;
    Eigen::setNbThreads(config.workers);

    if (cmd_run->parsed())
      bsv::run_experiment(config, out_dir);
    else if (cmd_jsi->parsed())
      bsv::write_jsi_only(config, out_dir);
    else
      bsv::convergence_report(config, out_dir);
    return 0;
  } catch (const bsv::ConfigError& e) {
    for (const auto& problem : e.problems()) std::fprintf(stderr, "error: %s\n", problem.c_str());
    return 1;
  } catch (const bsv::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
