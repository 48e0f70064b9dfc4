#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmdplab/config.hpp"
#include "cmdplab/instances.hpp"
#include "cmdplab/io.hpp"

using namespace cmdplab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cmdplab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string error_message(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

} // namespace

TEST(CmdpJson, RoundTripIsExact) {
    Rng rng(61, Rng::Instances);
    const Cmdp m = random_feasible_cmdp(rng, 3, 2, 2);
    const Cmdp back = cmdp_from_json(nlohmann::json::parse(cmdp_to_json(m).dump()));
    EXPECT_EQ(back.p, m.p);
    EXPECT_EQ(back.r, m.r);
    ASSERT_EQ(back.c.size(), 2u);
    EXPECT_EQ(back.c[1], m.c[1]);
    EXPECT_EQ(back.c_ub, m.c_ub);
}

TEST(CmdpJson, FileRoundTrip) {
    const fs::path dir = scratch_dir("json");
    const Cmdp m = two_state_cmdp(0.8, 0.45);
    save_cmdp(m, (dir / "m.json").string());
    const Cmdp back = load_cmdp((dir / "m.json").string());
    EXPECT_EQ(back.p, m.p);
    EXPECT_EQ(back.c_ub, m.c_ub);
    EXPECT_THROW(load_cmdp((dir / "missing.json").string()), ModelError);
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(load_cmdp((dir / "bad.json").string()), ModelError);
}

TEST(CmdpJson, SchemaErrors) {
    nlohmann::json j = cmdp_to_json(two_state_cmdp(0.8, 0.45));
    auto broken = j;
    broken.erase("r");
    EXPECT_THROW(cmdp_from_json(broken), ModelError);
    broken = j;
    broken["p"][0][0] = {0.5, 0.6};
    EXPECT_THROW(cmdp_from_json(broken), ModelError);
    broken = j;
    broken["p"][1] = nlohmann::json::array();
    EXPECT_THROW(cmdp_from_json(broken), ModelError);
    broken = j;
    broken["c_ub"] = {0.1, 0.2};
    EXPECT_THROW(cmdp_from_json(broken), ModelError);
    broken = j;
    broken["S"] = "two";
    EXPECT_THROW(cmdp_from_json(broken), ModelError);
}

TEST(FormatReal, RoundTripDigits) {
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(-2.0), "-2");
    EXPECT_EQ(format_real(std::nan("")), "");
    EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(RunCsv, HeaderAndRows) {
    RunSpec spec;
    spec.environment = two_state_cmdp(0.8, 0.45);
    spec.environment.c.push_back(spec.environment.c[0]);
    spec.environment.c_ub.push_back(0.6);
    spec.T = 100;
    spec.checkpoints = {1, 10, 100};
    std::ostringstream out;
    write_run_csv(out, run(spec, 1));
    const auto lines = lines_of(out.str());
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "t,reward_regret,cost_regret_1,cost_regret_2,episode_index");
    EXPECT_EQ(lines[3].substr(0, 4), "100,");
    EXPECT_EQ(std::count(lines[2].begin(), lines[2].end(), ','), 4);
}

TEST(Quantile, TypeSeven) {
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.75), 3.25);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.3), 7.0);
    const Spread s = spread_of({1, 2, 3, 4, 5});
    EXPECT_EQ(s.median, 3.0);
    EXPECT_EQ(s.q25, 2.0);
    EXPECT_EQ(s.q75, 4.0);
}

TEST(SummaryCsv, ColumnsAndBounds) {
    RunSpec spec;
    spec.environment = two_state_cmdp(0.8, 0.45);
    spec.T = 200;
    spec.checkpoints = {1, 100, 200};
    const auto runs = run_many(spec, {1, 2, 3});
    const auto rows = summarize(runs, spec.environment, overlay_inputs(spec.environment, 0.05, {}));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_FALSE(rows[0].bounds.has_value());
    ASSERT_TRUE(rows[2].bounds.has_value());
    EXPECT_GT(rows[2].bounds->theorem1_bound, 0.0);
    // The two-state diameter is 2.
    EXPECT_NEAR(rows[2].bounds->theorem3_floor, 0.015 * std::sqrt(2.0 * 4.0), 1e-6);

    std::ostringstream out;
    write_summary_csv(out, rows, 1);
    const auto lines = lines_of(out.str());
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0],
              "t,reward_regret_median,reward_regret_q25,reward_regret_q75,cost_regret_1_median,cost_regret_1_q25,"
              "cost_regret_1_q75,episodes_median,theorem1_bound,theorem2_reward_bound,theorem2_cost_bound_1,"
              "theorem3_floor,theorem3_floor_with_T");
    for (const auto& line : lines) EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12) << line;
    EXPECT_EQ(lines[1].substr(lines[1].size() - 5), ",,,,,");

    std::vector<double> finals;
    for (const auto& r : runs) finals.push_back(r.trace.checkpoints[2].reward_regret);
    EXPECT_EQ(rows[2].reward_regret.median, quantile(finals, 0.5));
}

TEST(SummaryJson, NoWallTime) {
    RunSpec spec;
    spec.environment = two_state_cmdp(0.8, 0.45);
    spec.T = 50;
    const auto runs = run_many(spec, {1, 2});
    const auto rows = summarize(runs, spec.environment, overlay_inputs(spec.environment, 0.05, {}));
    const std::string text = summary_json(runs, rows, 1.45, {0.45}).dump();
    EXPECT_EQ(text.find("wall"), std::string::npos);
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j["runs"].size(), 2u);
    EXPECT_EQ(j["runs"][0]["trajectory_hash"].get<std::string>().size(), 16u);
    EXPECT_EQ(j["runs"][1]["transitions"], 50);
}

TEST(Config, MinimalDefaults) {
    const ExperimentConfig cfg = parse_config("version: 1\n");
    EXPECT_EQ(cfg.environment.builtin, "two-state");
    EXPECT_EQ(cfg.learner.name, "ucrl-cmdp");
    EXPECT_EQ(cfg.T, 10000u);
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1}));
    EXPECT_TRUE(cfg.checkpoints.empty());
}

TEST(Config, FullDocument) {
    const ExperimentConfig cfg = parse_config(R"(version: 1
environment:
  builtin: two-state
  theta: 0.7
  c_ub: 0.4
learner:
  name: modified-ucrl-cmdp
  delta: 0.1
  budgets: [20]
  tts: {lambda0: 0.5, u0: 0.25, lambda_max: 50}
T: 5000
seeds: [3, 1, 2]
checkpoints: [10, 100, 5000]
output: results
initial_state: 1
)");
    EXPECT_EQ(cfg.environment.theta, 0.7);
    EXPECT_EQ(cfg.learner.budgets, (std::vector<double>{20.0}));
    EXPECT_EQ(cfg.learner.tts.u0, 0.25);
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{3, 1, 2}));
    EXPECT_EQ(cfg.checkpoints.back(), 5000u);
    EXPECT_EQ(cfg.initial_state, 1u);
    EXPECT_EQ(parse_config(to_yaml(cfg)), cfg);
}

TEST(Config, RoundTripPreservesDoubles) {
    ExperimentConfig cfg;
    cfg.environment.theta = 0.1 + 0.2;
    cfg.environment.c_ub = 1.0 / 3.0;
    cfg.learner.gamma_override = 0.123456789012345678;
    cfg.learner.tighten_override = {1e-17};
    cfg.learner.name = "modified-ucrl-cmdp";
    cfg.seeds = {5, 9};
    EXPECT_EQ(parse_config(to_yaml(cfg)), cfg);
}

TEST(Config, ErrorsAreLineAnchored) {
    EXPECT_EQ(error_line("version: 1\nT: 10\nbogus: 3\n"), 3);
    EXPECT_EQ(error_line("version: 1\nlearner:\n  name: ucrl-cmdp\n  delta: 1.5\n"), 4);
    EXPECT_EQ(error_line("version: 1\nT: ten\n"), 2);
    EXPECT_EQ(error_line("version: 1\nseeds: [1, 2, 1]\n"), 2);
    EXPECT_EQ(error_line("version: 1\nT: 10\ncheckpoints: [1, 20]\n"), 3);
    EXPECT_EQ(error_line("version: 1\nenvironment:\n  builtin: two-state\n  theta: 1.5\n  c_ub: 0.4\n"), 4);
    EXPECT_EQ(error_line("version: 2\n"), 1);
    EXPECT_GT(error_line("version: 1\nT: [1,\n"), 0);
}

TEST(Config, UnknownLearnerListsValidNames) {
    const std::string msg = error_message("version: 1\nlearner:\n  name: sarsa\n");
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    for (const auto& name : learner_names()) EXPECT_NE(msg.find(name), std::string::npos) << name;
}

TEST(Config, StructuralErrors) {
    EXPECT_THROW(parse_config("- 1\n- 2\n"), ConfigError);
    EXPECT_THROW(parse_config("T: 10\n"), ConfigError);
    EXPECT_THROW(parse_config("version: 1\nseeds: []\n"), ConfigError);
    EXPECT_THROW(parse_config("version: 1\nT: 0\n"), ConfigError);
    EXPECT_THROW(parse_config("version: 1\ncheckpoints: sometimes\n"), ConfigError);
    EXPECT_THROW(parse_config("version: 1\nenvironment:\n  builtin: three-state\n  theta: 0.5\n  c_ub: 0.4\n"),
                 ConfigError);
    EXPECT_THROW(parse_config("version: 1\nenvironment:\n  builtin: two-state\n  theta: 0.5\n"), ConfigError);
    EXPECT_THROW(parse_config("version: 1\nenvironment:\n  file: m.json\n  theta: 0.5\n"), ConfigError);
}

TEST(Config, FileEnvironmentIsRelativeToConfig) {
    const fs::path dir = scratch_dir("config");
    save_cmdp(two_state_cmdp(0.6, 0.45), (dir / "env.json").string());
    std::ofstream(dir / "exp.yaml") << "version: 1\nenvironment:\n  file: env.json\nT: 20\n";
    const ExperimentConfig cfg = load_config((dir / "exp.yaml").string());
    EXPECT_TRUE(cfg.environment.is_file());
    const RunSpec spec = cfg.run_spec();
    EXPECT_DOUBLE_EQ(spec.environment.p(0, 0, 1), 0.6);
    EXPECT_EQ(spec.T, 20u);
    EXPECT_THROW(load_config((dir / "absent.yaml").string()), ConfigError);
}
