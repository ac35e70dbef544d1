#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gpmpc/app/commands.hpp"

using namespace gpmpc;

namespace {

enum Exit { ok = 0, internal = 1, config_error = 2, data_error = 3, numerical_error = 4 };

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "out";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value run configuration (a manifest works too)");
  sub->add_option("--seed", c.seed, "master seed, overrides the config")->each([&](const std::string&) {
    c.seed_given = true;
  });
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

app::RunConfig load(const Common& c) {
  app::RunConfig cfg = c.config.empty() ? app::RunConfig{} : app::load_config(c.config);
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

void print_file(const std::string& path) {
  std::cout << util::read_file(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"GP-based MPC for a three-zone cooling system"};
  cli.set_version_flag("--version", std::string("gpmpc ") + app::kVersion);
  cli.require_subcommand(1);
  cli.footer(
      "Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.\n"
      "Every command writes manifest.txt into --out; pass it back with --config to replay the run.");

  Common common;
  auto* train = cli.add_subcommand("train", "clean, downsample and deduplicate the recording, fit the three zone GPs");
  auto* validate = cli.add_subcommand("validate", "multi-step rollouts of the trained models on the holdout log");
  auto* simulate = cli.add_subcommand("simulate", "one closed-loop run (simulate.controller/scenario/T_init)");
  auto* compare = cli.add_subcommand("compare", "controller x scenario x initial-temperature matrix");
  auto* bench = cli.add_subcommand("bench", "MPC solve time against GP dataset size");
  auto* generate = cli.add_subcommand("generate", "write synthetic recording and holdout logs from the nominal plant");
  for (auto* s : {train, validate, simulate, compare, bench, generate}) add_common(s, common);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return config_error;
  }

  try {
    const auto cfg = load(common);
    const auto& out = common.out;
    if (*train) {
      app::cmd_train(cfg, out);
      print_file(out + "/train_report.txt");
    } else if (*validate) {
      app::cmd_validate(cfg, out);
      print_file(out + "/validation_report.txt");
    } else if (*simulate) {
      app::cmd_simulate(cfg, out);
      print_file(out + "/metrics.txt");
    } else if (*compare) {
      app::cmd_compare(cfg, out);
      print_file(out + "/summary.csv");
    } else if (*bench) {
      app::cmd_bench(cfg, out);
      print_file(out + "/bench_summary.csv");
    } else if (*generate) {
      app::cmd_generate(cfg, out);
      std::cout << "wrote " << out << "/recording.csv and " << out << "/holdout.csv\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return data_error;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return data_error;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return internal;
  }
  return ok;
}
