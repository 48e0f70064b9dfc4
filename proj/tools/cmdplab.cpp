#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cmdplab/analysis.hpp"
#include "cmdplab/config.hpp"
#include "cmdplab/harness.hpp"
#include "cmdplab/io.hpp"
#include "cmdplab/verify.hpp"

namespace fs = std::filesystem;
using namespace cmdplab;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> num_seeds;
    std::string seed_list;
    std::optional<std::string> out;
    std::optional<std::string> learner;
    std::optional<double> theta;
    std::optional<double> cub;
    std::optional<std::uint64_t> T;
    std::optional<double> delta;
    std::string budgets;
};

std::vector<double> parse_reals(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string("--") + what + ": '" + item + "' is not a number");
        }
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--seed-list: '" + item + "' is not a non-negative integer");
        }
    }
    return out;
}

ExperimentConfig resolve_config(const Overrides& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.learner) cfg.learner.name = *o.learner;
    if (o.theta) cfg.environment.theta = *o.theta;
    if (o.cub) cfg.environment.c_ub = *o.cub;
    if ((o.theta || o.cub) && cfg.environment.is_file())
        throw ConfigError("--theta/--cub apply to the builtin environment only");
    if (o.T) cfg.T = *o.T;
    if (o.delta) cfg.learner.delta = *o.delta;
    if (!o.budgets.empty()) cfg.learner.budgets = parse_reals(o.budgets, "budgets");
    if (o.num_seeds && !o.seed_list.empty()) throw ConfigError("use either --seeds or --seed-list");
    if (o.num_seeds) {
        cfg.seeds.clear();
        for (std::uint64_t s = 1; s <= *o.num_seeds; ++s) cfg.seeds.push_back(s);
    }
    if (!o.seed_list.empty()) cfg.seeds = parse_seeds(o.seed_list);
    if (o.out) cfg.output = *o.out;
    validate(cfg);
    return cfg;
}

std::size_t thread_cap() {
    const char* env = std::getenv("CMDPLAB_THREADS");
    if (!env || !*env) return 1;
    try {
        const long v = std::stol(env);
        return v < 1 ? 1 : static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(std::string("CMDPLAB_THREADS must be a positive integer, got '") + env + "'");
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

int cmd_run(const Overrides& o) {
    const ExperimentConfig cfg = resolve_config(o);
    const RunSpec spec = cfg.run_spec();
    const std::vector<RunResult> runs = run_many(spec, cfg.seeds, thread_cap());

    const fs::path out_dir(cfg.output);
    fs::create_directories(out_dir);
    for (const auto& r : runs) {
        std::ostringstream csv;
        write_run_csv(csv, r);
        write_file(out_dir / fmt::format("run_seed{}.csv", r.seed), csv.str());
    }
    const std::vector<double> b = cfg.learner.name == "modified-ucrl-cmdp" ? cfg.learner.budgets : std::vector<double>{};
    const auto rows = summarize(runs, spec.environment, overlay_inputs(spec.environment, cfg.learner.delta, b));
    std::ostringstream summary;
    write_summary_csv(summary, rows, spec.environment.M());
    write_file(out_dir / "summary.csv", summary.str());
    const double r_star = solve_cmdp(spec.environment).r_star;
    write_file(out_dir / "summary.json", summary_json(runs, rows, r_star, spec.environment.c_ub).dump(2) + "\n");
    write_file(out_dir / "config.yaml", to_yaml(cfg));

    double wall = 0.0;
    for (const auto& r : runs) wall += r.wall_seconds;
    std::cout << fmt::format("{} runs of {} (T = {}) written to {} ({:.2f} s of run time)\n", runs.size(),
                             runs.front().learner, cfg.T, out_dir.string(), wall);
    return kOk;
}

struct BoundaryArgs {
    double cub = 0.45;
    double start = 0.0;
    double stop = 1.0;
    double step = 0.05;
    std::string out;
};

int cmd_boundary(const BoundaryArgs& a) {
    if (!(a.step > 0.0) || a.stop < a.start) throw ConfigError("grid needs step > 0 and stop >= start");
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor((a.stop - a.start) / a.step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) grid.push_back(a.start + static_cast<double>(k) * a.step);
    for (double th : grid)
        if (th < 0.0 || th > 1.0 + 1e-12) throw ConfigError("theta grid must lie in [0,1]");
    const auto curve = feasibility_boundary([&](double th) { return two_state_cmdp(std::min(th, 1.0), a.cub); }, grid);

    std::ostringstream csv;
    csv << "theta,min_cost,c_ub,feasible\n";
    for (const auto& pt : curve)
        csv << format_real(pt.param) << ',' << format_real(pt.min_cost) << ',' << format_real(a.cub) << ','
            << (pt.feasible ? 1 : 0) << '\n';
    if (a.out.empty())
        std::cout << csv.str();
    else
        write_file(a.out, csv.str());
    return kOk;
}

struct VerifyArgs {
    std::vector<std::string> only;
    double tolerance_scale = 1.0;
    bool list = false;
};

int cmd_verify(const VerifyArgs& a) {
    const auto suite = verification_suite();
    if (a.list) {
        for (const auto& p : suite) std::cout << p.name << "  " << p.description << '\n';
        return kOk;
    }
    std::vector<const Property*> selected;
    for (const auto& p : suite)
        if (a.only.empty() || std::find(a.only.begin(), a.only.end(), p.name) != a.only.end()) selected.push_back(&p);
    for (const auto& name : a.only)
        if (std::none_of(suite.begin(), suite.end(), [&](const Property& p) { return p.name == name; }))
            throw ConfigError("unknown property '" + name + "' (see verify --list)");
    if (selected.empty()) throw ConfigError("no properties selected");
    if (!(a.tolerance_scale >= 0.0)) throw ConfigError("--tolerance-scale must be non-negative");

    std::size_t failed = 0;
    for (const Property* p : selected) {
        PropertyOutcome res;
        try {
            res = p->check(a.tolerance_scale);
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("error: ") + e.what();
        }
        if (!res.pass) ++failed;
        std::cout << (res.pass ? "PASS " : "FAIL ") << p->name << ": " << res.detail << '\n';
    }
    std::cout << fmt::format("{}/{} properties passed\n", selected.size() - failed, selected.size());
    return failed == 0 ? kOk : kFailed;
}

int cmd_report(const Overrides& o) {
    const ExperimentConfig cfg = resolve_config(o);
    const Cmdp m = cfg.environment.build(cfg.base_dir);
    m.validate();
    const CmdpSolution sol = solve_cmdp(m);
    if (!sol.feasible) throw OracleInfeasible("CMDP is infeasible");

    std::cout << "# instance\nS,A,M,r_star,eta,eta_hat,diameter,duality_gap";
    for (std::size_t i = 1; i <= m.M(); ++i) std::cout << ",lambda_" << i;
    std::cout << '\n';
    const std::vector<double> b = cfg.learner.name == "modified-ucrl-cmdp" ? cfg.learner.budgets : std::vector<double>{};
    const OverlayInputs ov = overlay_inputs(m, cfg.learner.delta, b);
    std::string gap;
    try {
        gap = format_real(dual_certificate(m).gap);
    } catch (const NotStrictlyFeasible&) {
        gap = "";
    }
    std::cout << m.S() << ',' << m.A() << ',' << m.M() << ',' << format_real(sol.r_star) << ',' << format_real(ov.eta)
              << ',' << format_real(ov.eta_hat) << ',' << format_real(ov.diameter) << ',' << gap;
    for (double l : sol.lambda_star) std::cout << ',' << format_real(l);
    std::cout << "\n\n# bounds\nT,theorem1_bound,theorem2_reward_bound";
    for (std::size_t i = 1; i <= m.M(); ++i) std::cout << ",theorem2_cost_bound_" << i;
    std::cout << ",theorem3_floor,theorem3_floor_with_T\n";
    const auto schedule = cfg.checkpoints.empty() ? geometric_checkpoints(cfg.T) : cfg.checkpoints;
    for (std::uint64_t t : schedule) {
        if (t < 2) continue;
        BoundInputs in{t, m.S(), m.A(), m.M(), ov.delta, ov.eta, ov.eta_hat, ov.b, ov.diameter, ov.scale};
        const BoundReport rep = theorem_bounds(in);
        std::cout << t << ',' << format_real(rep.theorem1_bound) << ',' << format_real(rep.theorem2_reward_bound);
        for (double v : rep.theorem2_cost_bounds) std::cout << ',' << format_real(v);
        std::cout << ',' << format_real(rep.theorem3_floor) << ',' << format_real(rep.theorem3_floor_with_T) << '\n';
    }
    return kOk;
}

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Experiment config (YAML)");
    auto* seeds = cmd->add_option("--seeds", o.num_seeds, "Use seeds 1..N");
    cmd->add_option("--seed-list", o.seed_list, "Comma-separated seeds")->excludes(seeds);
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--learner", o.learner, "Learner name");
    cmd->add_option("--theta", o.theta, "Two-state parameter theta");
    cmd->add_option("--cub", o.cub, "Cost budget of the two-state environment");
    cmd->add_option("--T", o.T, "Horizon");
    cmd->add_option("--delta", o.delta, "Confidence parameter");
    cmd->add_option("--budgets", o.budgets, "Comma-separated cost-regret budgets b_i");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained-MDP learning lab"};
    app.require_subcommand(1);

    Overrides run_opts, report_opts;
    auto* run_cmd = app.add_subcommand("run", "Run a learner over several seeds and write CSV/JSON results");
    add_experiment_flags(run_cmd, run_opts);

    BoundaryArgs boundary_opts;
    auto* boundary_cmd = app.add_subcommand("boundary", "Feasibility boundary of the two-state family as CSV");
    boundary_cmd->add_option("--cub", boundary_opts.cub, "Cost budget");
    boundary_cmd->add_option("--theta-start", boundary_opts.start, "First theta");
    boundary_cmd->add_option("--theta-stop", boundary_opts.stop, "Last theta");
    boundary_cmd->add_option("--theta-step", boundary_opts.step, "Grid step");
    boundary_cmd->add_option("--out", boundary_opts.out, "Output file (default stdout)");

    VerifyArgs verify_opts;
    auto* verify_cmd = app.add_subcommand("verify", "Run the numerical property suite");
    verify_cmd->add_option("--only", verify_opts.only, "Run only these properties")->delimiter(',');
    verify_cmd->add_option("--tolerance-scale", verify_opts.tolerance_scale, "Multiply every tolerance");
    verify_cmd->add_flag("--list", verify_opts.list, "List properties and exit");

    auto* report_cmd = app.add_subcommand("report", "Instance constants and theorem bounds as CSV blocks");
    add_experiment_flags(report_cmd, report_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(run_opts);
        if (*boundary_cmd) return cmd_boundary(boundary_opts);
        if (*verify_cmd) return cmd_verify(verify_opts);
        if (*report_cmd) return cmd_report(report_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidInputs& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const OracleInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    }
    return kFailed;
}
