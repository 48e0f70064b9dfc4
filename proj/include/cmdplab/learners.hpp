#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/error.hpp"
#include "cmdplab/estimation.hpp"
#include "cmdplab/lp.hpp"
#include "cmdplab/random.hpp"

namespace cmdplab {

/// Everything a learner is allowed to know about the problem: the known
/// reward and cost tables and budgets, but not the transition law.
struct ProblemShape {
    std::size_t S = 0;
    std::size_t A = 0;
    Table r;
    std::vector<Table> c;
    std::vector<double> c_ub;

    std::size_t M() const noexcept { return c.size(); }

    static ProblemShape of(const Cmdp& m) { return {m.S(), m.A(), m.r, m.c, m.c_ub}; }

    Cmdp with_transitions(TransitionTensor p) const { return {std::move(p), r, c, c_ub}; }
};

struct LearnerContext {
    ProblemShape shape;
    std::uint64_t T = 1;
    double delta = 0.05;
    std::uint64_t seed = 0;
};

struct EpisodeRecord {
    std::uint64_t k = 0;
    std::uint64_t tau = 0;
    bool feasible = true;
};

/**
 * Uniform learner contract. `act` may consume one draw of the learner's own
 * generator; `observe` is the only call that mutates statistics.
 */
class Learner {
public:
    virtual ~Learner() = default;
    virtual std::string name() const = 0;
    virtual std::size_t act(std::size_t s) = 0;
    virtual void observe(std::size_t s, std::size_t a, std::size_t next) = 0;
    /// Planning episodes started so far (empty for learners without episodes).
    virtual const std::vector<EpisodeRecord>& episodes() const {
        static const std::vector<EpisodeRecord> none;
        return none;
    }
};

/// gamma = 1 / g(T) with g(t) = t^{1/4}.
inline double exploration_rate(std::uint64_t T) { return std::pow(static_cast<double>(T), -0.25); }

// ---------------------------------------------------------------------------
// Optimistic planning
// ---------------------------------------------------------------------------

struct OptimisticPlan {
    bool feasible = false;
    OccupationMeasure mu_tilde;
    TransitionTensor p_tilde;
    double objective = 0.0;
    std::vector<double> planned_costs;
};

/**
 * Joint maximization over occupation measures mu and plausible transitions
 * p' in the confidence set, solved exactly as one LP in z(s,a,s') = mu(s,a)
 * p'(s,a,s') with auxiliaries w(s,a,s') bounding |z - p_hat mu|:
 *
 *   max  sum z r
 *   s.t. sum z = 1
 *        sum_{a,s'} z(s,a,s') = sum_{s',b} z(s',b,s)            for all s
 *        sum mu c_i <= c_ub_i - tighten_i                         for all i
 *        -w <= z - p_hat mu <= w
 *        sum_{s'} w(s,a,s') <= eps(s,a) mu(s,a)
 *
 * Rows for pairs whose ball already contains every distribution (eps >= 2,
 * or eps >= 1 for unvisited pairs) are omitted.
 */
inline OptimisticPlan plan_optimistic(const ConfidenceSet& cs, const ProblemShape& shape,
                                      std::span<const double> tighten = {}, const LpOptions& opt = {}) {
    const std::size_t S = shape.S, A = shape.A, M = shape.M();
    if (cs.p_hat.states() != S || cs.p_hat.actions() != A)
        throw DimensionMismatch("confidence set shape does not match the problem");
    if (!tighten.empty() && tighten.size() != M) throw DimensionMismatch("need one tightening per cost");

    const std::size_t nz = S * A * S;
    auto zi = [&](std::size_t s, std::size_t a, std::size_t x) { return (s * A + a) * S + x; };
    auto wi = [&](std::size_t s, std::size_t a, std::size_t x) { return nz + zi(s, a, x); };

    LpProblem lp(2 * nz);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t x = 0; x < S; ++x) lp.objective[zi(s, a, x)] = shape.r(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));

    {
        std::vector<double> row(2 * nz, 0.0);
        std::fill(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(nz), 1.0);
        lp.add_eq(std::move(row), 1.0);
    }
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> row(2 * nz, 0.0);
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t x = 0; x < S; ++x) row[zi(s, a, x)] += 1.0;
        for (std::size_t y = 0; y < S; ++y)
            for (std::size_t b = 0; b < A; ++b) row[zi(y, b, s)] -= 1.0;
        lp.add_eq(std::move(row), 0.0);
    }
    for (std::size_t i = 0; i < M; ++i) {
        std::vector<double> row(2 * nz, 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t x = 0; x < S; ++x)
                    row[zi(s, a, x)] = shape.c[i](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
        lp.add_ineq(std::move(row), shape.c_ub[i] - (tighten.empty() ? 0.0 : tighten[i]));
    }
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double eps = cs.eps(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
            auto phat = cs.p_hat.row(s, a);
            double mass = 0.0;
            for (double v : phat) mass += v;
            const bool visited = mass > 0.5;
            if ((visited && eps >= 2.0) || (!visited && eps >= 1.0)) continue;

            for (std::size_t x = 0; x < S; ++x) {
                std::vector<double> upper(2 * nz, 0.0), lower(2 * nz, 0.0);
                for (std::size_t y = 0; y < S; ++y) {
                    upper[zi(s, a, y)] -= phat[x];
                    lower[zi(s, a, y)] += phat[x];
                }
                upper[zi(s, a, x)] += 1.0;
                lower[zi(s, a, x)] -= 1.0;
                upper[wi(s, a, x)] = -1.0;
                lower[wi(s, a, x)] = -1.0;
                lp.add_ineq(std::move(upper), 0.0);
                lp.add_ineq(std::move(lower), 0.0);
            }
            std::vector<double> ball(2 * nz, 0.0);
            for (std::size_t x = 0; x < S; ++x) {
                ball[wi(s, a, x)] = 1.0;
                ball[zi(s, a, x)] = -eps;
            }
            lp.add_ineq(std::move(ball), 0.0);
        }
    }

    const LpSolution sol = solve_lp(lp, opt);
    OptimisticPlan plan;
    plan.p_tilde = TransitionTensor(S, A);
    if (sol.status != LpStatus::Optimal) return plan;

    plan.feasible = true;
    plan.objective = sol.objective_value;
    plan.mu_tilde.mu = Table::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            double mu = 0.0;
            for (std::size_t x = 0; x < S; ++x) mu += sol.x[zi(s, a, x)];
            plan.mu_tilde.mu(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = mu;
            auto out = plan.p_tilde.row(s, a);
            if (mu > 1e-12) {
                for (std::size_t x = 0; x < S; ++x) out[x] = sol.x[zi(s, a, x)] / mu;
                continue;
            }
            auto phat = cs.p_hat.row(s, a);
            double mass = 0.0;
            for (double v : phat) mass += v;
            for (std::size_t x = 0; x < S; ++x)
                out[x] = std::abs(mass - 1.0) < 1e-9 ? phat[x] : 1.0 / static_cast<double>(S);
        }
    }
    for (const Table& ci : shape.c) plan.planned_costs.push_back((plan.mu_tilde.mu.array() * ci.array()).sum());
    return plan;
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

/// State of the current planning episode.
struct EpisodePlan {
    std::uint64_t k = 0;
    std::uint64_t tau = 1;
    OccupationMeasure mu_tilde;
    TransitionTensor p_tilde;
    StationaryPolicy policy;
    /// Visits within the episode and visit counts at its start, indexed s*A+a.
    std::vector<std::uint64_t> n_k;
    std::vector<std::uint64_t> n_snapshot;
    bool feasible = false;
    double objective = 0.0;
    std::size_t A = 0;

    std::uint64_t visits(std::size_t s, std::size_t a) const { return n_k[s * A + a]; }
    std::uint64_t snapshot(std::size_t s, std::size_t a) const { return n_snapshot[s * A + a]; }
};

/// Doubling trigger: the pair just visited has n_k(s,a) >= max(1, N_tau(s,a)).
inline bool episode_should_end(const EpisodePlan& plan, std::size_t s, std::size_t a) {
    return plan.visits(s, a) >= std::max<std::uint64_t>(1, plan.snapshot(s, a));
}

/**
 * Action of the optimistic learner from one uniform draw u. If the episode's
 * program was infeasible the uniform fallback is played; otherwise the draw
 * chooses a uniform action with probability gamma and SR(mu_tilde) otherwise.
 */
inline std::size_t ucrl_act(const EpisodePlan& plan, std::size_t s, double u, double gamma) {
    const std::size_t A = plan.A;
    auto uniform_action = [A](double v) { return std::min(A - 1, static_cast<std::size_t>(v * static_cast<double>(A))); };
    if (!plan.feasible) return uniform_action(u);
    if (u < gamma) return uniform_action(u / gamma);
    return sample_index(plan.policy.row(s), (u - gamma) / (1.0 - gamma));
}

/**
 * Shared machinery for learners that replan on the doubling schedule: counts,
 * episode bookkeeping, and the episode log. Subclasses fill in the plan.
 */
class EpisodicLearner : public Learner {
public:
    explicit EpisodicLearner(LearnerContext ctx)
        : ctx_(std::move(ctx)), counts_(ctx_.shape.S, ctx_.shape.A), rng_(ctx_.seed, Rng::Learner) {}

    std::size_t act(std::size_t s) override {
        if (pending_) start_episode();
        return choose(s, rng_.uniform());
    }

    void observe(std::size_t s, std::size_t a, std::size_t next) override {
        if (plan_.n_k.empty()) start_episode();
        counts_.record(s, a, next);
        ++plan_.n_k[s * ctx_.shape.A + a];
        if (episode_should_end(plan_, s, a)) pending_ = true;
    }

    const std::vector<EpisodeRecord>& episodes() const override { return log_; }
    const EpisodePlan& plan() const noexcept { return plan_; }
    const TransitionCounts& counts() const noexcept { return counts_; }

protected:
    virtual void plan_episode(EpisodePlan& plan) = 0;
    virtual std::size_t choose(std::size_t s, double u) = 0;

    void start_episode() {
        const std::size_t S = ctx_.shape.S, A = ctx_.shape.A;
        EpisodePlan next;
        next.k = plan_.k + 1;
        next.tau = counts_.t();
        next.A = A;
        next.n_k.assign(S * A, 0);
        next.n_snapshot.resize(S * A);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) next.n_snapshot[s * A + a] = counts_.n(s, a);
        plan_episode(next);
        plan_ = std::move(next);
        log_.push_back({plan_.k, plan_.tau, plan_.feasible});
        pending_ = false;
    }

    LearnerContext ctx_;
    TransitionCounts counts_;
    EpisodePlan plan_;
    Rng rng_;
    std::vector<EpisodeRecord> log_;
    bool pending_ = true;
};

/// Cost-regret budgets b_i in [0, 34].
struct RegretBudgets {
    std::vector<double> b;

    void validate() const {
        for (double v : b)
            if (!(v >= 0.0 && v <= 34.0))
                throw InvalidInputs("regret budgets must lie in [0, 34], got " + std::to_string(v));
    }
};

/**
 * d_i = (34 - b_i) / T * S * sqrt(A T^1.5 log(T / delta)).
 * Throws BudgetTooTight if some c_ub_i - d_i <= 0.
 */
inline std::vector<double> modified_budgets_to_tighten(const RegretBudgets& budgets, std::size_t S, std::size_t A,
                                                       std::uint64_t T, double delta,
                                                       std::span<const double> c_ub = {}) {
    budgets.validate();
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidDelta("delta must lie in (0,1)");
    if (T < 1) throw InvalidInputs("T must be positive");
    const double Td = static_cast<double>(T);
    const double scale = static_cast<double>(S) * std::sqrt(static_cast<double>(A) * std::pow(Td, 1.5) * std::log(Td / delta));
    std::vector<double> d;
    for (std::size_t i = 0; i < budgets.b.size(); ++i) {
        d.push_back((34.0 - budgets.b[i]) / Td * scale);
        if (i < c_ub.size() && c_ub[i] - d.back() <= 0.0)
            throw BudgetTooTight("tightened budget for cost " + std::to_string(i + 1) + " is " +
                                 std::to_string(c_ub[i] - d.back()) + "; raise b_i or T");
    }
    return d;
}

/**
 * UCRL-CMDP: optimistic joint planning at each episode start, uniform
 * exploration with probability T^{-1/4}, uniform fallback when the
 * optimistic program is infeasible. A non-zero `tighten` vector gives the
 * modified algorithm with budgets c_ub - d.
 */
class UcrlCmdpLearner : public EpisodicLearner {
public:
    UcrlCmdpLearner(LearnerContext ctx, std::vector<double> tighten = {}, std::string name = "ucrl-cmdp")
        : EpisodicLearner(std::move(ctx)), tighten_(std::move(tighten)), name_(std::move(name)),
          gamma_(exploration_rate(ctx_.T)) {
        if (tighten_.empty()) tighten_.assign(ctx_.shape.M(), 0.0);
        if (tighten_.size() != ctx_.shape.M()) throw DimensionMismatch("need one tightening per cost");
    }

    std::string name() const override { return name_; }
    double gamma() const noexcept { return gamma_; }
    /// Test hook: replace the exploration probability.
    void set_gamma(double g) { gamma_ = g; }
    const std::vector<double>& tighten() const noexcept { return tighten_; }

protected:
    void plan_episode(EpisodePlan& plan) override {
        const ConfidenceSet cs = make_confidence_set(counts_, ctx_.delta);
        OptimisticPlan core = plan_optimistic(cs, ctx_.shape, tighten_);
        plan.feasible = core.feasible;
        plan.objective = core.objective;
        plan.p_tilde = std::move(core.p_tilde);
        if (core.feasible) {
            plan.policy = sr_policy(core.mu_tilde);
            plan.mu_tilde = std::move(core.mu_tilde);
        } else {
            plan.policy = uniform_policy(ctx_.shape.S, ctx_.shape.A);
        }
    }

    std::size_t choose(std::size_t s, double u) override { return ucrl_act(plan_, s, u, gamma_); }

private:
    std::vector<double> tighten_;
    std::string name_;
    double gamma_;
};

/// p_hat with unvisited rows replaced by the uniform distribution.
inline TransitionTensor completed_estimate(const TransitionCounts& counts) {
    TransitionTensor p = empirical_estimate(counts);
    for (std::size_t s = 0; s < counts.states(); ++s)
        for (std::size_t a = 0; a < counts.actions(); ++a)
            if (counts.n(s, a) == 0)
                for (double& v : p.row(s, a)) v = 1.0 / static_cast<double>(counts.states());
    return p;
}

/**
 * Certainty equivalence: solve the CMDP at the completed empirical estimate
 * and play SR(mu*) if feasible, the uniform policy otherwise. Replans on the
 * doubling schedule, or every step when `replan_every_step` is set.
 */
class CertaintyEquivalenceLearner : public EpisodicLearner {
public:
    CertaintyEquivalenceLearner(LearnerContext ctx, bool replan_every_step = false)
        : EpisodicLearner(std::move(ctx)), every_step_(replan_every_step) {}

    std::string name() const override { return "ce"; }

    void observe(std::size_t s, std::size_t a, std::size_t next) override {
        EpisodicLearner::observe(s, a, next);
        if (every_step_) pending_ = true;
    }

protected:
    void plan_episode(EpisodePlan& plan) override {
        const CmdpSolution sol = solve_cmdp(ctx_.shape.with_transitions(completed_estimate(counts_)));
        plan.feasible = sol.feasible;
        if (sol.feasible) {
            plan.objective = sol.r_star;
            plan.policy = sr_policy(sol.mu_star);
            plan.mu_tilde = sol.mu_star;
        } else {
            plan.policy = uniform_policy(ctx_.shape.S, ctx_.shape.A);
        }
    }

    std::size_t choose(std::size_t s, double u) override { return sample_index(plan_.policy.row(s), u); }

private:
    bool every_step_;
};

namespace detail {
/// The two-state family: 2 states, 2 actions, one cost.
inline void require_two_state(const ProblemShape& shape, const char* who) {
    if (shape.S != 2 || shape.A != 2 || shape.M() != 1)
        throw WrongEnvironment(std::string(who) + " needs the two-state, two-action, one-cost example");
}

/// theta_hat = N(0,0,1) / max(N(0,0), 1).
inline double theta_hat(const TransitionCounts& counts) {
    return static_cast<double>(counts.n(0, 0, 1)) / static_cast<double>(std::max<std::uint64_t>(counts.n(0, 0), 1));
}
} // namespace detail

/// Threshold form of certainty equivalence on the two-state example: play
/// action 0 in state 0 iff theta_hat >= 0.5 (1 / c_ub - 1). Returns the
/// probability of action 0 in state 0 (1 or 1/2).
inline double ce_threshold_rule(double theta_hat, double c_ub) {
    return theta_hat >= 0.5 * (1.0 / c_ub - 1.0) ? 1.0 : 0.5;
}

/// Certainty-equivalence threshold rule on the two-state example, replanned
/// on the doubling schedule. Action 0 is always played in state 1.
class CeThresholdLearner : public EpisodicLearner {
public:
    explicit CeThresholdLearner(LearnerContext ctx) : EpisodicLearner(std::move(ctx)) {
        detail::require_two_state(ctx_.shape, "ce-threshold");
    }

    std::string name() const override { return "ce-threshold"; }

protected:
    void plan_episode(EpisodePlan& plan) override {
        const double u = ce_threshold_rule(detail::theta_hat(counts_), ctx_.shape.c_ub[0]);
        plan.feasible = u == 1.0;
        Table pi(2, 2);
        pi << u, 1.0 - u, 1.0, 0.0;
        plan.policy = {pi};
    }

    std::size_t choose(std::size_t s, double u) override { return sample_index(plan_.policy.row(s), u); }
};

struct TwoTimescaleParams {
    double lambda0 = 0.0;
    double u0 = 0.5;
    double lambda_max = 100.0;
};

/**
 * Two-timescale primal-dual learner for the two-state example. The price
 * follows lambda <- Proj[0, lambda_max](lambda + (c - c_ub) / t) and the
 * probability u of action 0 in state 0 follows
 * u <- Proj[0,1](u + beta_t (1{lambda > 1, theta_hat > .5} + 1{lambda < 1, theta_hat < .5}))
 * with beta_t = 1 / (t (1 + ln t)). State 1 always plays action 0.
 */
class TwoTimescaleLearner : public Learner {
public:
    TwoTimescaleLearner(LearnerContext ctx, TwoTimescaleParams params = {})
        : ctx_(std::move(ctx)), params_(params), counts_(2, 2), rng_(ctx_.seed, Rng::Learner),
          lambda_(params.lambda0), u_(params.u0) {
        detail::require_two_state(ctx_.shape, "tts");
    }

    std::string name() const override { return "tts"; }

    std::size_t act(std::size_t s) override {
        const double draw = rng_.uniform();
        if (s != 0) return 0;
        return draw < u_ ? 0 : 1;
    }

    void observe(std::size_t s, std::size_t a, std::size_t next) override {
        const double t = static_cast<double>(counts_.t());
        const double theta = detail::theta_hat(counts_);
        const double cost = ctx_.shape.c[0](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
        const double lambda_t = lambda_;
        lambda_ = price_update(lambda_, t, cost, ctx_.shape.c_ub[0], params_.lambda_max);
        const double push = (lambda_t > 1.0 && theta > 0.5 ? 1.0 : 0.0) + (lambda_t < 1.0 && theta < 0.5 ? 1.0 : 0.0);
        u_ = std::clamp(u_ + slow_step(t) * push, 0.0, 1.0);
        counts_.record(s, a, next);
    }

    static double fast_step(double t) { return 1.0 / t; }
    static double slow_step(double t) { return 1.0 / (t * (1.0 + std::log(t))); }
    static double price_update(double lambda, double t, double cost, double c_ub, double lambda_max) {
        return std::clamp(lambda + fast_step(t) * (cost - c_ub), 0.0, lambda_max);
    }

    double lambda() const noexcept { return lambda_; }
    double u() const noexcept { return u_; }

private:
    LearnerContext ctx_;
    TwoTimescaleParams params_;
    TransitionCounts counts_;
    Rng rng_;
    double lambda_;
    double u_;
};

/// Plays a fixed stationary policy (the uniform one by default).
class FixedPolicyLearner : public Learner {
public:
    FixedPolicyLearner(LearnerContext ctx, StationaryPolicy policy, std::string name)
        : policy_(std::move(policy)), name_(std::move(name)), rng_(ctx.seed, Rng::Learner) {}

    explicit FixedPolicyLearner(LearnerContext ctx)
        : FixedPolicyLearner(ctx, uniform_policy(ctx.shape.S, ctx.shape.A), "uniform") {}

    std::string name() const override { return name_; }
    std::size_t act(std::size_t s) override { return sample_index(policy_.row(s), rng_.uniform()); }
    void observe(std::size_t, std::size_t, std::size_t) override {}

private:
    StationaryPolicy policy_;
    std::string name_;
    Rng rng_;
};

} // namespace cmdplab
