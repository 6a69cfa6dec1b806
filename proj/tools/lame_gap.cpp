#include "lamegap/config.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

int jobs_default() {
  if (const char* env = std::getenv("LAME_GAP_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lame-gap: two-inclusion elasticity gap experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int jobs = jobs_default();
  bool force = false;

  CLI::App* run = app.add_subcommand("run", "execute a run config");
  run->add_option("config", config_path, "TOML run config")->required();
  run->add_option("--out", out_override, "output directory override");
  run->add_option("--jobs,-j", jobs, "parallel sweep workers");
  run->add_flag("--force", force, "overwrite an existing run directory");

  CLI::App* validate = app.add_subcommand("validate", "check a config without solving");
  validate->add_option("config", config_path, "TOML run config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) {
      const lamegap::RunConfig cfg = lamegap::load_config(config_path);
      lamegap::validate_config(cfg);
      std::cout << "OK\n" << lamegap::plan_summary(cfg);
      return 0;
    }

    const lamegap::RunConfig cfg = lamegap::load_config(config_path);
    const std::string out_dir =
        out_override.empty() ? cfg.out_dir : out_override;
    const lamegap::RunOutcome outcome =
        lamegap::run_experiments(cfg, out_dir, jobs, force);
    for (const auto& c : outcome.checks)
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
                << ": measured " << c.measured << " target [" << c.lo << ", "
                << c.hi << "]\n";
    std::cout << (outcome.all_passed ? "all checks passed\n"
                                     : "some checks FAILED\n");
    return outcome.all_passed ? 0 : 1;
  } catch (const lamegap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lamegap::PreconditionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lamegap::SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
