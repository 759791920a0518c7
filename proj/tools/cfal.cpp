// cfal: command line front end for runs, sweeps, verification and fixtures.
#include "cfal/harness.hpp"
#include "cfal/io.hpp"
#include "cfal/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<cfal::Index> trials;
  std::optional<std::string> ablate;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

cfal::ExperimentConfig configure(const std::string& path, const Overrides& o) {
  auto config = cfal::load_config(path);
  if (o.seed) config.seed = *o.seed;
  if (o.out) config.output = *o.out;
  if (o.trials) {
    if (*o.trials < 1) throw cfal::ConfigError("--trials must be at least 1");
    config.trials = *o.trials;
  }
  if (o.ablate) {
    try {
      config.ablations = cfal::Ablations::without(*o.ablate);
    } catch (const std::invalid_argument& e) {
      throw cfal::ConfigError(e.what());
    }
  }
  return config;
}

int experiment(const std::string& path, const Overrides& o, bool sweep) {
  const auto config = configure(path, o);
  const auto result = cfal::run_experiment(config);
  const auto csv = cfal::curve_csv(result.rows);
  if (config.output.empty()) {
    std::cout << csv;
    if (sweep) std::cout << '\n' << cfal::grid_csv(result.grid);
    return 0;
  }
  write_file(config.output, csv);
  write_file(config.output + ".meta.json", cfal::metadata_json(config, sweep ? &result : nullptr));
  if (sweep) {
    write_file(config.output + ".auc.csv", cfal::grid_csv(result.grid));
    std::cout << cfal::grid_csv(result.best);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning with logged observational data"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string config_path;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    cmd->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { overrides.seed = v; },
                                            "root seed");
    cmd->add_option_function<std::string>("--out", [&](const std::string& v) { overrides.out = v; },
                                          "output CSV path");
    cmd->add_option_function<cfal::Index>("--trials", [&](const cfal::Index& v) { overrides.trials = v; },
                                          "number of trials");
    cmd->add_option_function<std::string>("--ablate", [&](const std::string& v) { overrides.ablate = v; },
                                          "components to switch off: clipping,regularizer,debias,mis,dbal");
  };
  auto* run = app.add_subcommand("run", "run an experiment config");
  add_run_flags(run);
  auto* sweep = app.add_subcommand("sweep", "sweep parameter grids and pick the best AUC");
  add_run_flags(sweep);

  std::string suite = "all";
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "run property suites");
  verify->add_option("suite", suite, "suite name or 'all'");
  verify->add_option("--seed", verify_seed, "root seed");

  std::string fixture;
  bool dump = false;
  auto* world = app.add_subcommand("world", "inspect a named fixture");
  world->add_option("fixture", fixture, "theorem2, table1, example2 or consistency")->required();
  world->add_flag("--dump", dump, "print the world as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return experiment(config_path, overrides, false);
    if (*sweep) return experiment(config_path, overrides, true);
    if (*verify) {
      const auto& names = cfal::verify_suites();
      if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end()) {
        std::cerr << "error: unknown verify suite '" << suite << "'\n";
        return 2;
      }
      const auto rows = cfal::verify(suite, verify_seed);
      std::cout << cfal::verify_table(rows);
      return cfal::all_pass(rows) ? 0 : 1;
    }
    if (*world) {
      const auto f = cfal::named_fixture(fixture);
      if (dump) {
        std::cout << cfal::world_to_json(f.world, f.hypotheses);
      } else {
        const auto best = cfal::best_hypothesis(f.world, f.hypotheses);
        std::cout << "instances " << f.world.size() << "\nhypotheses " << f.hypotheses.size()
                  << "\nbest " << best.index << "\nbest_error " << cfal::format_double(best.nu)
                  << "\nmin_propensity " << cfal::format_double(f.world.min_propensity()) << '\n';
      }
      return 0;
    }
  } catch (const cfal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    if (*world) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
