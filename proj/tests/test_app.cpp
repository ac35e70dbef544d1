#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "gpmpc/app/commands.hpp"

using namespace gpmpc;
using namespace gpmpc::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("gpmpc_test_app_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CellResult cell(const std::string& ctrl, const std::string& scen, double T0, double E, double v) {
  CellResult r;
  r.controller = ctrl;
  r.scenario = scen;
  r.T_init = T0;
  r.energy_kwh = E;
  r.avg_violation = v;
  return r;
}

// Small training log so the file-level commands run in seconds.
const fs::path& small_run() {
  static const fs::path dir = [] {
    const auto d = scratch("small");
    RunConfig c;
    c.recording_samples = 3000;
    c.holdout_samples = 1500;
    c.train_iterations = 5;
    cmd_generate(c, (d / "logs").string());
    auto t = load_config((d / "logs" / "manifest.txt").string());
    t.train_iterations = 5;
    cmd_train(t, (d / "train").string());
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GPMPC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, RoundTripsThroughText) {
  RunConfig c;
  c.seed = 42;
  c.mpc.beta = 1.5;
  c.T_inits = {18.0, 20.25};
  c.controllers = {"PI", "MPC"};
  c.pi_tuned = false;
  c.pi_kp = {1.0, 2.0, 3.0};
  c.pi_ki = {0.1, 0.2, 0.3};
  c.recording = "/abs/rec.csv";
  const auto text = format_config(c);
  const auto back = parse_config(util::parse_key_values(text, "mem"));
  EXPECT_EQ(config_values(back), config_values(c));
  EXPECT_EQ(format_config(back), text);
}

TEST(Config, RejectsUnknownKeysButNotMeta) {
  util::KeyValues kv{{"mpc.horizon", "12"}, {"mpc.horizn", "12"}};
  EXPECT_THROW(parse_config(kv), ConfigError);
  kv.erase("mpc.horizn");
  kv["meta.command"] = "train";
  EXPECT_NO_THROW(parse_config(kv));
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config({{"mpc.horizon", "0"}}), ConfigError);
  EXPECT_THROW(parse_config({{"mpc.horizon", "twelve"}}), ConfigError);
  EXPECT_THROW(parse_config({{"scenarios", "hot,arctic"}}), ConfigError);
  EXPECT_THROW(parse_config({{"validate.interval", "0"}}), ConfigError);
}

TEST(Config, RelativePathsResolveAgainstTheFile) {
  const auto d = scratch("paths");
  util::write_file((d / "run.txt").string(), "recording = logs/rec.csv\nholdout = /x/h.csv\n");
  const auto c = load_config((d / "run.txt").string());
  EXPECT_EQ(fs::path(c.recording), (d / "logs" / "rec.csv").lexically_normal());
  EXPECT_EQ(c.holdout, "/x/h.csv");
  EXPECT_THROW(load_config((d / "missing.txt").string()), ConfigError);
}

TEST(Seeds, StreamsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(1, stream::plant), derive_seed(1, stream::plant));
  EXPECT_NE(derive_seed(1, stream::plant), derive_seed(1, stream::gains));
  EXPECT_NE(derive_seed(1, stream::plant), derive_seed(2, stream::plant));
}

TEST(Matrix, NormalizesByReferenceAtLowestInitialTemperature) {
  std::vector<CellResult> cells{cell("REF", "hot", 21.0, 90.0, 0.0), cell("REF", "hot", 17.0, 100.0, 0.0),
                                cell("PI", "hot", 19.0, 110.0, 0.1), cell("PI", "warm", 19.0, 80.0, 0.1)};
  normalize(cells);
  EXPECT_DOUBLE_EQ(cells[0].normalized_energy, 0.9);
  EXPECT_DOUBLE_EQ(cells[2].normalized_energy, 1.1);
  EXPECT_TRUE(std::isnan(cells[3].normalized_energy));
}

TEST(Matrix, DominanceNeedsOneStrictImprovement) {
  const auto a = cell("MPC", "hot", 19.0, 100.0, 0.1);
  EXPECT_FALSE(dominates(a, a));
  EXPECT_TRUE(dominates(cell("PI", "hot", 19.0, 100.0, 0.05), a));
  EXPECT_FALSE(dominates(cell("PI", "hot", 19.0, 99.0, 0.2), a));
}

TEST(Matrix, SavingsAgainstBothRuleBasedBaselines) {
  RunConfig c;
  c.scenarios = {"hot"};
  c.T_inits = {19.0};
  const std::vector<CellResult> cells{cell("MPC", "hot", 19.0, 95.0, 0.1), cell("PI", "hot", 19.0, 100.0, 0.1),
                                      cell("ONOFF", "hot", 19.0, 90.0, 0.05)};
  const auto s = mpc_savings(cells, c);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].baseline, "PI");
  EXPECT_NEAR(s[0].savings, 0.05, 1e-12);
  EXPECT_FALSE(s[0].mpc_dominated);
  EXPECT_TRUE(s[1].mpc_dominated);
}

TEST(Commands, CompareIsDeterministic) {
  RunConfig c;
  c.scenarios = {"hot"};
  c.controllers = {"PI", "ONOFF", "AVG"};
  c.T_inits = {19.0};
  c.steps = 12;
  c.process_noise = 0.02;
  const auto d = scratch("compare");
  const auto a = cmd_compare(c, (d / "a").string());
  cmd_compare(load_config((d / "a" / "manifest.txt").string()), (d / "b").string());
  ASSERT_EQ(a.size(), 3u);
  for (const auto& r : a) EXPECT_TRUE(r.error.empty()) << r.error;
  EXPECT_EQ(util::read_file((d / "a" / "summary.csv").string()), util::read_file((d / "b" / "summary.csv").string()));
  EXPECT_EQ(util::read_file((d / "a" / "traces" / cell_file_name(a[2])).string()),
            util::read_file((d / "b" / "traces" / cell_file_name(a[2])).string()));
}

TEST(Commands, TrainWritesReportAndReplayableManifest) {
  const auto d = small_run();
  const auto report = util::parse_key_values(util::read_file((d / "train" / "train_report.txt").string()), "r");
  EXPECT_EQ(report.count("zone1.points"), 1u);
  const auto m = load_config((d / "train" / "manifest.txt").string());
  EXPECT_EQ(fs::path(m.models), d / "train" / "models");
  EXPECT_EQ(load_models(m).zone(0).size(), std::stoul(report.at("zone1.points")));
}

TEST(Commands, ValidateRejectsHoldoutOverlappingTraining) {
  const auto d = small_run();
  auto c = load_config((d / "train" / "manifest.txt").string());
  c.holdout = c.recording;
  EXPECT_THROW(cmd_validate(c, (d / "val_overlap").string()), DataError);
  c.holdout = (d / "logs" / "holdout.csv").string();
  const auto v = cmd_validate(c, (d / "val").string());
  EXPECT_GT(v.segments, 0);
  EXPECT_TRUE(fs::exists(d / "val" / "rollouts.csv"));
}

TEST(Commands, MissingDataIsADataError) {
  RunConfig c;
  c.recording = "/nonexistent/recording.csv";
  EXPECT_THROW(cmd_train(c, scratch("missing").string()), ParseError);
}

TEST(Cli, ExitCodes) {
  const auto d = scratch("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("train --bogus"), 2);
  EXPECT_EQ(run_cli("train --config " + (d / "missing.txt").string()), 2);
  util::write_file((d / "bad.txt").string(), "mpc.horizon = 0\n");
  EXPECT_EQ(run_cli("simulate --config " + (d / "bad.txt").string()), 2);
  util::write_file((d / "nodata.txt").string(), "recording = nowhere.csv\n");
  EXPECT_EQ(run_cli("train --config " + (d / "nodata.txt").string() + " --out " + (d / "o").string()), 3);
  util::write_file((d / "garbage.csv").string(), "not,a,log\n1,2\n");
  util::write_file((d / "garbage.txt").string(), "recording = garbage.csv\n");
  EXPECT_EQ(run_cli("train --config " + (d / "garbage.txt").string() + " --out " + (d / "o").string()), 3);
}
