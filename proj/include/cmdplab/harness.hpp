#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/error.hpp"
#include "cmdplab/learners.hpp"
#include "cmdplab/random.hpp"

namespace cmdplab {

/// Simulated system. The generator only advances inside step().
class Environment {
public:
    Environment(Cmdp m, std::uint64_t seed, std::size_t initial_state = 0)
        : cmdp_(std::move(m)), state_(initial_state), rng_(seed, Rng::Environment) {
        if (state_ >= cmdp_.S()) throw IndexOutOfRange("initial state out of range");
    }

    /// Samples s' ~ p(state, a, .) by inverse CDF on one draw.
    std::size_t step(std::size_t a) {
        if (a >= cmdp_.A()) throw IndexOutOfRange("action " + std::to_string(a) + " out of range");
        state_ = sample_index(cmdp_.p.row(state_, a), rng_.uniform());
        return state_;
    }

    std::size_t state() const noexcept { return state_; }
    const Cmdp& cmdp() const noexcept { return cmdp_; }

private:
    Cmdp cmdp_;
    std::size_t state_;
    Rng rng_;
};

struct Checkpoint {
    std::uint64_t t = 0;
    double reward_regret = 0.0;
    std::vector<double> cost_regret;
    std::uint64_t episode = 0;
};

/**
 * Running sums and checkpointed regrets:
 *   reward regret  r_star t - sum r(s_l, a_l)
 *   cost regret i  sum c_i(s_l, a_l) - c_ub_i t
 */
struct RegretTrace {
    double r_star = 0.0;
    std::vector<double> c_ub;
    std::uint64_t t = 0;
    double cum_reward = 0.0;
    std::vector<double> cum_cost;
    std::vector<Checkpoint> checkpoints;

    RegretTrace() = default;
    RegretTrace(double r_star_, std::vector<double> budgets)
        : r_star(r_star_), c_ub(std::move(budgets)), cum_cost(c_ub.size(), 0.0) {}

    void add(double reward, const std::vector<double>& costs) {
        ++t;
        cum_reward += reward;
        for (std::size_t i = 0; i < cum_cost.size(); ++i) cum_cost[i] += costs[i];
    }

    double reward_regret() const { return r_star * static_cast<double>(t) - cum_reward; }
    std::vector<double> cost_regret() const {
        std::vector<double> out(cum_cost.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = cum_cost[i] - c_ub[i] * static_cast<double>(t);
        return out;
    }

    void checkpoint(std::uint64_t episode) {
        checkpoints.push_back({t, reward_regret(), cost_regret(), episode});
    }
};

/// Learner selection and hyperparameters.
struct LearnerSpec {
    std::string name = "ucrl-cmdp";
    double delta = 0.05;
    /// Cost-regret budgets b (modified learner only).
    std::vector<double> budgets;
    /// Overrides the d computed from budgets (modified learner only).
    std::vector<double> tighten_override;
    bool ce_replan_every_step = false;
    TwoTimescaleParams tts;
    /// Overrides the exploration probability T^{-1/4}.
    std::optional<double> gamma_override;

    bool operator==(const LearnerSpec& o) const {
        return name == o.name && delta == o.delta && budgets == o.budgets && tighten_override == o.tighten_override &&
               ce_replan_every_step == o.ce_replan_every_step && tts.lambda0 == o.tts.lambda0 &&
               tts.u0 == o.tts.u0 && tts.lambda_max == o.tts.lambda_max && gamma_override == o.gamma_override;
    }
};

inline const std::vector<std::string>& learner_names() {
    static const std::vector<std::string> names = {"ucrl-cmdp", "modified-ucrl-cmdp", "ce",     "ce-threshold",
                                                   "tts",       "uniform",            "oracle"};
    return names;
}

/**
 * Builds a learner. Only "oracle" reads `truth`: it plays SR(mu*) of the true
 * CMDP and serves as a zero-regret reference.
 */
inline std::unique_ptr<Learner> make_learner(const LearnerSpec& spec, const LearnerContext& ctx, const Cmdp& truth) {
    if (spec.name == "ucrl-cmdp" || spec.name == "modified-ucrl-cmdp") {
        std::vector<double> d;
        if (spec.name == "modified-ucrl-cmdp") {
            if (!spec.tighten_override.empty())
                d = spec.tighten_override;
            else
                d = modified_budgets_to_tighten(RegretBudgets{spec.budgets}, ctx.shape.S, ctx.shape.A, ctx.T,
                                                ctx.delta, ctx.shape.c_ub);
            if (d.size() != ctx.shape.M())
                throw InvalidInputs("modified-ucrl-cmdp needs one budget per cost (" + std::to_string(ctx.shape.M()) +
                                    "), got " + std::to_string(d.size()));
        }
        auto learner = std::make_unique<UcrlCmdpLearner>(ctx, d, spec.name);
        if (spec.gamma_override) learner->set_gamma(*spec.gamma_override);
        return learner;
    }
    if (spec.name == "ce") return std::make_unique<CertaintyEquivalenceLearner>(ctx, spec.ce_replan_every_step);
    if (spec.name == "ce-threshold") return std::make_unique<CeThresholdLearner>(ctx);
    if (spec.name == "tts") return std::make_unique<TwoTimescaleLearner>(ctx, spec.tts);
    if (spec.name == "uniform") return std::make_unique<FixedPolicyLearner>(ctx);
    if (spec.name == "oracle") {
        const CmdpSolution sol = solve_cmdp(truth);
        if (!sol.feasible) throw OracleInfeasible("true CMDP is infeasible");
        return std::make_unique<FixedPolicyLearner>(ctx, sr_policy(sol.mu_star), "oracle");
    }
    std::string valid;
    for (const auto& n : learner_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw InvalidInputs("unknown learner '" + spec.name + "'; valid names: " + valid);
}

/// t = ceil(ratio^j) for j = 0, 1, ... up to T, deduplicated, with T appended.
inline std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t T, double ratio = 1.5) {
    std::vector<std::uint64_t> out;
    for (double x = 1.0; x <= static_cast<double>(T); x *= ratio) {
        const auto t = static_cast<std::uint64_t>(std::ceil(x - 1e-9));
        if (t <= T && (out.empty() || t > out.back())) out.push_back(t);
    }
    if (out.empty() || out.back() != T) out.push_back(T);
    return out;
}

struct RunSpec {
    Cmdp environment;
    LearnerSpec learner;
    std::uint64_t T = 1;
    /// Strictly increasing; empty selects geometric_checkpoints(T).
    std::vector<std::uint64_t> checkpoints;
    std::size_t initial_state = 0;
    bool record_trajectory = false;
};

struct StepRecord {
    std::size_t s = 0;
    std::size_t a = 0;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::string learner;
    RegretTrace trace;
    std::vector<EpisodeRecord> episodes;
    double wall_seconds = 0.0;
    std::uint64_t transitions = 0;
    /// FNV-1a over the (s, a) sequence.
    std::uint64_t trajectory_hash = 0;
    std::vector<StepRecord> trajectory;

    double final_reward_regret() const { return trace.reward_regret(); }
    std::vector<double> final_cost_regret() const { return trace.cost_regret(); }
};

/**
 * One trajectory of T steps: act, collect reward and costs, step the
 * environment, observe. Regret is measured against r_star of the true CMDP;
 * throws OracleInfeasible if that CMDP is infeasible.
 */
inline RunResult run(const RunSpec& spec, std::uint64_t seed) {
    if (spec.T < 1) throw InvalidInputs("T must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    const Cmdp& truth = spec.environment;
    truth.validate();
    const CmdpSolution oracle = solve_cmdp(truth);
    if (!oracle.feasible) throw OracleInfeasible("true CMDP is infeasible; regret is undefined");

    const std::vector<std::uint64_t> schedule =
        spec.checkpoints.empty() ? geometric_checkpoints(spec.T) : spec.checkpoints;
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1]) throw InvalidInputs("checkpoints must be strictly increasing");

    LearnerContext ctx{ProblemShape::of(truth), spec.T, spec.learner.delta, seed};
    std::unique_ptr<Learner> learner = make_learner(spec.learner, ctx, truth);
    Environment env(truth, seed, spec.initial_state);

    RunResult res;
    res.seed = seed;
    res.learner = learner->name();
    res.trace = RegretTrace(oracle.r_star, truth.c_ub);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    std::vector<double> costs(truth.M());
    std::size_t next_checkpoint = 0;

    for (std::uint64_t t = 1; t <= spec.T; ++t) {
        const std::size_t s = env.state();
        const std::size_t a = learner->act(s);
        const auto si = static_cast<Eigen::Index>(s), ai = static_cast<Eigen::Index>(a);
        for (std::size_t i = 0; i < costs.size(); ++i) costs[i] = truth.c[i](si, ai);
        res.trace.add(truth.r(si, ai), costs);
        const std::size_t next = env.step(a);
        learner->observe(s, a, next);
        ++res.transitions;
        hash = (hash ^ (s * 1315423911ULL + a)) * 0x100000001b3ULL;
        if (spec.record_trajectory) res.trajectory.push_back({s, a});
        while (next_checkpoint < schedule.size() && schedule[next_checkpoint] == t) {
            res.trace.checkpoint(learner->episodes().size());
            ++next_checkpoint;
        }
    }
    res.trajectory_hash = hash;
    res.episodes = learner->episodes();
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

/// A single run inside run_many failed; the message carries the seed.
class RunFailure : public Error {
public:
    RunFailure(std::uint64_t seed, const std::string& msg)
        : Error("seed " + std::to_string(seed) + ": " + msg), seed_(seed) {}
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

/**
 * Independent runs, one per seed, results in seed-list order regardless of
 * scheduling. `threads` = 0 uses the hardware concurrency.
 */
inline std::vector<RunResult> run_many(const RunSpec& spec, const std::vector<std::uint64_t>& seeds,
                                       std::size_t threads = 1) {
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw InvalidInputs("seeds must be distinct");
    if (!solve_cmdp(spec.environment).feasible)
        throw OracleInfeasible("true CMDP is infeasible; regret is undefined");

    std::vector<RunResult> results(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
            try {
                results[i] = run(spec, seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(seeds.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw RunFailure(seeds[i], e.what());
        }
    }
    return results;
}

} // namespace cmdplab
