#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/error.hpp"
#include "cmdplab/harness.hpp"
#include "cmdplab/io.hpp"

namespace cmdplab {

/**
 * Either a named builtin ("two-state", parameterized by theta and c_ub) or a
 * path to a CMDP JSON file. Relative paths resolve against the directory of
 * the configuration file.
 */
struct EnvironmentConfig {
    std::string builtin = "two-state";
    double theta = 0.8;
    double c_ub = 0.45;
    std::string file;

    bool is_file() const { return !file.empty(); }

    Cmdp build(const std::filesystem::path& base_dir = {}) const {
        if (is_file()) {
            std::filesystem::path p(file);
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            return load_cmdp(p.string());
        }
        return two_state_cmdp(theta, c_ub);
    }

    bool operator==(const EnvironmentConfig&) const = default;
};

struct ExperimentConfig {
    int version = 1;
    EnvironmentConfig environment;
    LearnerSpec learner;
    std::uint64_t T = 10000;
    std::vector<std::uint64_t> seeds = {1};
    /// Empty means the default geometric schedule.
    std::vector<std::uint64_t> checkpoints;
    std::string output = "out";
    std::size_t initial_state = 0;
    /// Directory of the file the config was loaded from; not serialized.
    std::filesystem::path base_dir;

    bool operator==(const ExperimentConfig& o) const {
        return version == o.version && environment == o.environment && learner == o.learner && T == o.T &&
               seeds == o.seeds && checkpoints == o.checkpoints && output == o.output &&
               initial_state == o.initial_state;
    }

    RunSpec run_spec() const {
        RunSpec spec;
        spec.environment = environment.build(base_dir);
        spec.learner = learner;
        spec.T = T;
        spec.checkpoints = checkpoints;
        spec.initial_state = initial_state;
        return spec;
    }
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

template <typename T>
T scalar(const YAML::Node& n, const std::string& key, const char* expected) {
    if (!n.IsScalar()) throw ConfigError("'" + key + "' must be " + expected, line_of(n));
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("'" + key + "' must be " + expected + ", got '" + n.Scalar() + "'", line_of(n));
    }
}

template <typename T>
std::vector<T> sequence(const YAML::Node& n, const std::string& key, const char* expected) {
    if (!n.IsSequence()) throw ConfigError("'" + key + "' must be a list of " + std::string(expected), line_of(n));
    std::vector<T> out;
    for (const auto& item : n) out.push_back(scalar<T>(item, key, expected));
    return out;
}

inline void check_keys(const YAML::Node& map, const std::string& where, const std::set<std::string>& allowed) {
    if (!map.IsMap()) throw ConfigError("'" + where + "' must be a mapping", line_of(map));
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
    }
}

inline void require(bool ok, const std::string& msg, const YAML::Node& at) {
    if (!ok) throw ConfigError(msg, line_of(at));
}

} // namespace detail

/// Checks value constraints; `line` anchors the message when known.
inline void validate(const ExperimentConfig& cfg) {
    if (cfg.version != 1) throw ConfigError("unsupported config version " + std::to_string(cfg.version));
    if (cfg.T < 1) throw ConfigError("T must be at least 1");
    if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
        throw ConfigError("seeds must be distinct");
    if (!(cfg.learner.delta > 0.0 && cfg.learner.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    const auto& names = learner_names();
    if (std::find(names.begin(), names.end(), cfg.learner.name) == names.end()) {
        std::string valid;
        for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
        throw ConfigError("unknown learner '" + cfg.learner.name + "'; valid names: " + valid);
    }
    if (!cfg.environment.is_file()) {
        if (cfg.environment.builtin != "two-state")
            throw ConfigError("unknown builtin environment '" + cfg.environment.builtin + "'; valid: two-state");
        if (!(cfg.environment.theta >= 0.0 && cfg.environment.theta <= 1.0))
            throw ConfigError("theta must lie in [0,1]");
    }
    for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
        if (cfg.checkpoints[i] < 1 || cfg.checkpoints[i] > cfg.T) throw ConfigError("checkpoints must lie in [1, T]");
        if (i > 0 && cfg.checkpoints[i] <= cfg.checkpoints[i - 1])
            throw ConfigError("checkpoints must be strictly increasing");
    }
}

/**
 * Parses a version-1 experiment config:
 *
 *   version: 1
 *   environment: {builtin: two-state, theta: 0.8, c_ub: 0.45}   # or {file: model.json}
 *   learner:
 *     name: ucrl-cmdp
 *     delta: 0.05
 *     budgets: [10]            # modified-ucrl-cmdp
 *     tighten: [0.05]          # modified-ucrl-cmdp, overrides budgets
 *     gamma: 0.1               # optional exploration override
 *     ce_replan_every_step: false
 *     tts: {lambda0: 0, u0: 0.5, lambda_max: 100}
 *   T: 10000
 *   seeds: [1, 2, 3]
 *   checkpoints: geometric     # or an explicit increasing list
 *   output: out
 *   initial_state: 0
 *
 * Errors are ConfigError with the 1-based line of the offending node.
 */
inline ExperimentConfig parse_config(const std::string& text) {
    using namespace detail;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.line + 1);
    }
    if (!root.IsMap()) throw ConfigError("config must be a mapping", line_of(root));
    check_keys(root, "config",
               {"version", "environment", "learner", "T", "seeds", "checkpoints", "output", "initial_state"});

    ExperimentConfig cfg;
    require(static_cast<bool>(root["version"]), "missing 'version'", root);
    cfg.version = scalar<int>(root["version"], "version", "an integer");
    require(cfg.version == 1, "unsupported config version " + std::to_string(cfg.version), root["version"]);

    if (const auto env = root["environment"]) {
        check_keys(env, "environment", {"builtin", "theta", "c_ub", "file"});
        if (env["file"]) {
            require(!env["builtin"] && !env["theta"] && !env["c_ub"],
                    "environment takes either 'file' or a builtin, not both", env);
            cfg.environment.file = scalar<std::string>(env["file"], "file", "a path");
            require(!cfg.environment.file.empty(), "'file' must not be empty", env["file"]);
        } else {
            require(static_cast<bool>(env["builtin"]), "environment needs 'builtin' or 'file'", env);
            cfg.environment.builtin = scalar<std::string>(env["builtin"], "builtin", "a name");
            require(cfg.environment.builtin == "two-state",
                    "unknown builtin environment '" + cfg.environment.builtin + "'; valid: two-state", env["builtin"]);
            require(env["theta"] && env["c_ub"], "builtin two-state needs both 'theta' and 'c_ub'", env);
            cfg.environment.theta = scalar<double>(env["theta"], "theta", "a number");
            require(cfg.environment.theta >= 0.0 && cfg.environment.theta <= 1.0, "theta must lie in [0,1]",
                    env["theta"]);
            cfg.environment.c_ub = scalar<double>(env["c_ub"], "c_ub", "a number");
        }
    }

    if (const auto l = root["learner"]) {
        check_keys(l, "learner", {"name", "delta", "budgets", "tighten", "gamma", "ce_replan_every_step", "tts"});
        if (l["name"]) {
            cfg.learner.name = scalar<std::string>(l["name"], "name", "a learner name");
            const auto& names = learner_names();
            if (std::find(names.begin(), names.end(), cfg.learner.name) == names.end()) {
                std::string valid;
                for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
                throw ConfigError("unknown learner '" + cfg.learner.name + "'; valid names: " + valid,
                                  line_of(l["name"]));
            }
        }
        if (l["delta"]) {
            cfg.learner.delta = scalar<double>(l["delta"], "delta", "a number");
            require(cfg.learner.delta > 0.0 && cfg.learner.delta < 1.0, "delta must lie in (0,1)", l["delta"]);
        }
        if (l["budgets"]) cfg.learner.budgets = sequence<double>(l["budgets"], "budgets", "numbers");
        if (l["tighten"]) cfg.learner.tighten_override = sequence<double>(l["tighten"], "tighten", "numbers");
        if (l["gamma"]) cfg.learner.gamma_override = scalar<double>(l["gamma"], "gamma", "a number");
        if (l["ce_replan_every_step"])
            cfg.learner.ce_replan_every_step = scalar<bool>(l["ce_replan_every_step"], "ce_replan_every_step", "true or false");
        if (const auto tts = l["tts"]) {
            check_keys(tts, "tts", {"lambda0", "u0", "lambda_max"});
            if (tts["lambda0"]) cfg.learner.tts.lambda0 = scalar<double>(tts["lambda0"], "lambda0", "a number");
            if (tts["u0"]) cfg.learner.tts.u0 = scalar<double>(tts["u0"], "u0", "a number");
            if (tts["lambda_max"])
                cfg.learner.tts.lambda_max = scalar<double>(tts["lambda_max"], "lambda_max", "a number");
        }
    }

    if (root["T"]) {
        const auto t = scalar<long long>(root["T"], "T", "a positive integer");
        require(t >= 1, "T must be at least 1", root["T"]);
        cfg.T = static_cast<std::uint64_t>(t);
    }
    if (const auto s = root["seeds"]) {
        cfg.seeds = sequence<std::uint64_t>(s, "seeds", "non-negative integers");
        require(!cfg.seeds.empty(), "seeds must not be empty", s);
        require(std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() == cfg.seeds.size(),
                "seeds must be distinct", s);
    }
    if (const auto c = root["checkpoints"]) {
        if (c.IsScalar()) {
            require(c.Scalar() == "geometric", "'checkpoints' must be 'geometric' or a list of times", c);
        } else {
            cfg.checkpoints = sequence<std::uint64_t>(c, "checkpoints", "positive integers");
            for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
                require(cfg.checkpoints[i] >= 1 && cfg.checkpoints[i] <= cfg.T, "checkpoints must lie in [1, T]", c[i]);
                require(i == 0 || cfg.checkpoints[i] > cfg.checkpoints[i - 1], "checkpoints must be strictly increasing",
                        c[i]);
            }
        }
    }
    if (root["output"]) cfg.output = scalar<std::string>(root["output"], "output", "a directory");
    if (root["initial_state"])
        cfg.initial_state = scalar<std::size_t>(root["initial_state"], "initial_state", "a state index");

    validate(cfg);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    ExperimentConfig cfg = parse_config(buf.str());
    cfg.base_dir = std::filesystem::path(path).parent_path();
    return cfg;
}

inline std::string to_yaml(const ExperimentConfig& cfg) {
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "version" << YAML::Value << cfg.version;

    e << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
    if (cfg.environment.is_file()) {
        e << YAML::Key << "file" << YAML::Value << cfg.environment.file;
    } else {
        e << YAML::Key << "builtin" << YAML::Value << cfg.environment.builtin;
        e << YAML::Key << "theta" << YAML::Value << cfg.environment.theta;
        e << YAML::Key << "c_ub" << YAML::Value << cfg.environment.c_ub;
    }
    e << YAML::EndMap;

    const LearnerSpec& l = cfg.learner;
    e << YAML::Key << "learner" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << l.name;
    e << YAML::Key << "delta" << YAML::Value << l.delta;
    if (!l.budgets.empty()) e << YAML::Key << "budgets" << YAML::Value << YAML::Flow << l.budgets;
    if (!l.tighten_override.empty()) e << YAML::Key << "tighten" << YAML::Value << YAML::Flow << l.tighten_override;
    if (l.gamma_override) e << YAML::Key << "gamma" << YAML::Value << *l.gamma_override;
    e << YAML::Key << "ce_replan_every_step" << YAML::Value << l.ce_replan_every_step;
    e << YAML::Key << "tts" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "lambda0" << YAML::Value << l.tts.lambda0;
    e << YAML::Key << "u0" << YAML::Value << l.tts.u0;
    e << YAML::Key << "lambda_max" << YAML::Value << l.tts.lambda_max;
    e << YAML::EndMap;
    e << YAML::EndMap;

    e << YAML::Key << "T" << YAML::Value << cfg.T;
    e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << cfg.seeds;
    if (cfg.checkpoints.empty())
        e << YAML::Key << "checkpoints" << YAML::Value << "geometric";
    else
        e << YAML::Key << "checkpoints" << YAML::Value << YAML::Flow << cfg.checkpoints;
    e << YAML::Key << "output" << YAML::Value << cfg.output;
    e << YAML::Key << "initial_state" << YAML::Value << cfg.initial_state;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

} // namespace cmdplab
