#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cmdplab/analysis.hpp"
#include "cmdplab/cmdp.hpp"
#include "cmdplab/estimation.hpp"
#include "cmdplab/instances.hpp"
#include "cmdplab/learners.hpp"
#include "cmdplab/oracles.hpp"
#include "cmdplab/random.hpp"

namespace cmdplab {

/// Outcome of one numerical property over a batch of trials.
struct PropertyOutcome {
    bool pass = false;
    std::size_t trials = 0;
    std::size_t violations = 0;
    /// Largest observed error (or excess) across trials.
    double worst = 0.0;
    /// Time spent in the code under test, where a check measures it.
    double seconds = 0.0;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Individual checks. Each takes the number of trials, a seed and a tolerance,
// and counts the trials that violate the property.
// ---------------------------------------------------------------------------

/// solve_lp against vertex enumeration on random bounded LPs with up to `max_vars` variables.
inline PropertyOutcome check_lp_vertex_equivalence(std::size_t trials, std::uint64_t seed, double tol,
                                                   std::size_t max_vars = 10) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    std::size_t infeasible = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        const LpProblem lp = random_bounded_lp(rng, uniform_int(rng, 1, max_vars));
        const auto start = std::chrono::steady_clock::now();
        const LpSolution sol = solve_lp(lp);
        out.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const VertexResult ref = enumerate_vertices(lp);
        ++out.trials;
        if (!ref.feasible) {
            ++infeasible;
            if (sol.status != LpStatus::Infeasible) ++out.violations;
            continue;
        }
        if (sol.status != LpStatus::Optimal) {
            ++out.violations;
            continue;
        }
        const double err = std::abs(sol.objective_value - ref.objective);
        out.worst = std::max(out.worst, err);
        if (err > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} LPs ({} infeasible), max |objective error| {:.3g}, solver time {:.3g} s", out.trials,
                             infeasible, out.worst, out.seconds);
    return out;
}

/// solve_cmdp against a policy grid on random instances with S <= 3, A <= 2, M = 1.
inline PropertyOutcome check_cmdp_policy_grid(std::size_t trials, std::uint64_t seed, double tol,
                                              std::size_t resolution = 100) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    for (std::size_t k = 0; k < trials; ++k) {
        const std::size_t S = uniform_int(rng, 1, 3), A = uniform_int(rng, 1, 2);
        const Cmdp m = random_feasible_cmdp(rng, S, A, 1);
        const CmdpSolution sol = solve_cmdp(m);
        const PolicyGridResult grid = policy_grid_search(m, resolution);
        ++out.trials;
        if (!sol.feasible || !grid.feasible) {
            ++out.violations;
            continue;
        }
        const double err = std::abs(sol.r_star - grid.r_star);
        out.worst = std::max(out.worst, err);
        if (err > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} instances, max |r* - grid max| {:.3g}", out.trials, out.worst);
    return out;
}

/// Random strictly feasible CMDPs with 2..4 states, 2..3 actions, 1..2 costs.
inline Cmdp random_duality_instance(Rng& rng) {
    return random_feasible_cmdp(rng, uniform_int(rng, 2, 4), uniform_int(rng, 2, 3), uniform_int(rng, 1, 2), 0.2, 0.8);
}

inline PropertyOutcome check_duality_gap(std::size_t trials, std::uint64_t seed, double tol) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    for (std::size_t k = 0; k < trials; ++k) {
        const DualCertificate cert = dual_certificate(random_duality_instance(rng));
        ++out.trials;
        out.worst = std::max(out.worst, cert.gap);
        bool ok = cert.gap < tol;
        for (double l : cert.lambda_star) ok = ok && l >= -1e-9;
        if (!ok) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} instances, max gap {:.3g}", out.trials, out.worst);
    return out;
}

/// sum_i lambda*_i <= eta_hat / eta, with eta from the max-min slack policy at epsilon = 0.
inline PropertyOutcome check_multiplier_bound(std::size_t trials, std::uint64_t seed, double tol) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    out.worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trials; ++k) {
        const Cmdp m = random_duality_instance(rng);
        const CmdpSolution sol = solve_cmdp(m);
        const EtaValues eta = eta_values(m, 0.0);
        double total = 0.0;
        for (double l : sol.lambda_star) total += l;
        const double excess = total - eta.eta_hat / eta.eta;
        ++out.trials;
        out.worst = std::max(out.worst, excess);
        if (excess > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} instances, max (sum lambda* - eta_hat/eta) {:.3g}", out.trials, out.worst);
    return out;
}

/**
 * r*(c_ub) - r*(c_ub - x) <= max_i x_i * eta_hat / eta for reductions x_i
 * drawn uniformly from [0, eta), which keep the reduced problem feasible.
 */
inline PropertyOutcome check_budget_sensitivity(std::size_t trials, std::uint64_t seed, double tol) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    out.worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trials; ++k) {
        const Cmdp m = random_duality_instance(rng);
        const EtaValues eta = eta_values(m, 0.0);
        Cmdp reduced = m;
        double max_cut = 0.0;
        for (double& b : reduced.c_ub) {
            const double cut = uniform_in(rng, 0.0, 0.999) * eta.eta;
            b -= cut;
            max_cut = std::max(max_cut, cut);
        }
        const CmdpSolution full = solve_cmdp(m), cut = solve_cmdp(reduced);
        ++out.trials;
        if (!full.feasible || !cut.feasible) {
            ++out.violations;
            continue;
        }
        const double excess = (full.r_star - cut.r_star) - max_cut * eta.eta_hat / eta.eta;
        out.worst = std::max(out.worst, excess);
        if (excess > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} instances, max excess over bound {:.3g}", out.trials, out.worst);
    return out;
}

inline PropertyOutcome check_perturbation_identity(std::size_t trials, std::uint64_t seed, double tol,
                                                   std::size_t states = 5) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    for (std::size_t k = 0; k < trials; ++k) {
        const Eigen::MatrixXd P = random_ergodic_chain(rng, states);
        const Eigen::MatrixXd Pt = random_ergodic_chain(rng, states);
        const double res = perturbation_residual(P, Pt);
        ++out.trials;
        out.worst = std::max(out.worst, res);
        if (res > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} chain pairs, max residual {:.3g}", out.trials, out.worst);
    return out;
}

/// Bias of a reward vector on a random ergodic chain, as a one-action CMDP.
inline BiasResult random_chain_bias(Rng& rng, std::size_t states, Eigen::MatrixXd* chain = nullptr,
                                    Table* reward = nullptr) {
    const Eigen::MatrixXd P = random_ergodic_chain(rng, states);
    TransitionTensor p(states, 1);
    Table f(static_cast<Eigen::Index>(states), 1);
    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t x = 0; x < states; ++x)
            p(s, 0, x) = P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(x));
        f(static_cast<Eigen::Index>(s), 0) = rng.uniform();
    }
    if (chain) *chain = P;
    if (reward) *reward = f;
    return compute_bias(p, StationaryPolicy{Table::Ones(static_cast<Eigen::Index>(states), 1)}, f);
}

inline PropertyOutcome check_poisson_residual(std::size_t trials, std::uint64_t seed, double tol,
                                              std::size_t states = 5) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    for (std::size_t k = 0; k < trials; ++k) {
        const BiasResult b = random_chain_bias(rng, states);
        ++out.trials;
        out.worst = std::max(out.worst, b.residual);
        if (b.residual > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} chains, max residual {:.3g}", out.trials, out.worst);
    return out;
}

/**
 * |v| <= span(r) t0 / rho: the geometric-mixing bound on the bias, which
 * follows from the Doeblin inequality by summing the series.
 */
inline PropertyOutcome check_bias_mixing_bound(std::size_t trials, std::uint64_t seed, double tol,
                                               std::size_t states = 5) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    out.worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trials; ++k) {
        Table f;
        const BiasResult b = random_chain_bias(rng, states, nullptr, &f);
        const double bound = (f.maxCoeff() - f.minCoeff()) * static_cast<double>(b.t0) / b.rho;
        const double excess = b.v.cwiseAbs().maxCoeff() - bound;
        ++out.trials;
        out.worst = std::max(out.worst, excess);
        if (excess > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} chains, max (|v| - span t0/rho) {:.3g}", out.trials, out.worst);
    return out;
}

inline PropertyOutcome check_doeblin_mixing(std::size_t trials, std::uint64_t seed, double tol,
                                            std::size_t t_max = 200, std::size_t states = 5) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    out.worst = -1.0;
    for (std::size_t k = 0; k < trials; ++k) {
        const MixingReport rep = mixing_check(random_ergodic_chain(rng, states), t_max, tol);
        ++out.trials;
        out.worst = std::max(out.worst, rep.max_slack);
        if (!rep.holds) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} chains, t <= {}, max (TV - bound) {:.3g}", out.trials, t_max, out.worst);
    return out;
}

/**
 * Builds confidence sets from uniform-play trajectories on random CMDPs and,
 * whenever the true model lies in the set, checks that the optimistic plan
 * reaches at least r* while meeting every budget. Snapshots where the truth
 * falls outside the set are skipped and do not count as trials.
 */
inline PropertyOutcome check_optimism(std::size_t trials, std::uint64_t seed, double tol, double delta = 0.05) {
    Rng rng(seed, Rng::Instances);
    PropertyOutcome out;
    std::size_t skipped = 0;
    double worst_cost = 0.0;
    while (out.trials < trials) {
        const std::size_t S = uniform_int(rng, 2, 3), A = uniform_int(rng, 2, 3);
        const Cmdp m = random_feasible_cmdp(rng, S, A, uniform_int(rng, 1, 2));
        const CmdpSolution truth = solve_cmdp(m);
        TransitionCounts counts(S, A);
        const std::size_t steps = uniform_int(rng, 0, 400);
        std::size_t s = 0;
        for (std::size_t t = 0; t < steps; ++t) {
            const std::size_t a = uniform_int(rng, 0, A - 1);
            const std::size_t next = sample_index(m.p.row(s, a), rng.uniform());
            counts.record(s, a, next);
            s = next;
        }
        const ConfidenceSet cs = make_confidence_set(counts, delta);
        if (!contains(cs, m.p)) {
            ++skipped;
            continue;
        }
        const OptimisticPlan plan = plan_optimistic(cs, ProblemShape::of(m));
        ++out.trials;
        if (!plan.feasible) {
            ++out.violations;
            continue;
        }
        const double shortfall = truth.r_star - plan.objective;
        double excess = 0.0;
        for (std::size_t i = 0; i < m.M(); ++i) excess = std::max(excess, plan.planned_costs[i] - m.c_ub[i]);
        out.worst = std::max(out.worst, shortfall);
        worst_cost = std::max(worst_cost, excess);
        if (shortfall > tol || excess > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} snapshots ({} skipped), max (r* - objective) {:.3g}, max cost excess {:.3g}",
                             out.trials, skipped, out.worst, worst_cost);
    return out;
}

/// min-cost curve of the two-state family against 1/(1+2 theta) for theta >= 0.5, else 0.5.
inline PropertyOutcome check_two_state_boundary(double tol, std::size_t points = 21) {
    std::vector<double> grid;
    for (std::size_t k = 0; k < points; ++k) grid.push_back(static_cast<double>(k) / static_cast<double>(points - 1));
    const auto curve = feasibility_boundary([](double th) { return two_state_cmdp(th, 0.5); }, grid);
    PropertyOutcome out;
    for (const auto& pt : curve) {
        const double expected = pt.param >= 0.5 ? 1.0 / (1.0 + 2.0 * pt.param) : 0.5;
        const double err = std::abs(pt.min_cost - expected);
        ++out.trials;
        out.worst = std::max(out.worst, err);
        if (err > tol) ++out.violations;
    }
    out.pass = out.violations == 0;
    out.detail = fmt::format("{} grid points, max error {:.3g}", out.trials, out.worst);
    return out;
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

struct Property {
    std::string name;
    std::string description;
    /// Argument is the tolerance scale.
    std::function<PropertyOutcome(double)> check;
};

/// The verification suite with its shipped trial counts and tolerances.
inline std::vector<Property> verification_suite() {
    return {
        {"lp-vertex", "simplex matches vertex enumeration (1e-7)",
         [](double k) { return check_lp_vertex_equivalence(100, 11, 1e-7 * k); }},
        {"cmdp-grid", "occupation LP matches a policy grid (5e-3)",
         [](double k) { return check_cmdp_policy_grid(10, 12, 5e-3 * k); }},
        {"two-state-boundary", "min-cost curve of the two-state family (1e-6)",
         [](double k) { return check_two_state_boundary(1e-6 * k); }},
        {"duality-gap", "strong duality on strictly feasible instances (1e-6)",
         [](double k) { return check_duality_gap(30, 13, 1e-6 * k); }},
        {"multiplier-bound", "sum of multipliers <= eta_hat / eta (1e-6)",
         [](double k) { return check_multiplier_bound(30, 14, 1e-6 * k); }},
        {"budget-sensitivity", "r* loss under budget cuts <= cut * eta_hat / eta (1e-6)",
         [](double k) { return check_budget_sensitivity(30, 15, 1e-6 * k); }},
        {"perturbation", "stationary perturbation identity (1e-8)",
         [](double k) { return check_perturbation_identity(50, 16, 1e-8 * k); }},
        {"poisson", "Poisson equation residual of the bias (1e-8)",
         [](double k) { return check_poisson_residual(50, 17, 1e-8 * k); }},
        {"bias-mixing-bound", "|v| <= span(r) t0 / rho (1e-9)",
         [](double k) { return check_bias_mixing_bound(50, 18, 1e-9 * k); }},
        {"doeblin", "TV mixing within (1 - rho)^floor(t/t0) for t <= 200 (1e-12)",
         [](double k) { return check_doeblin_mixing(20, 19, 1e-12 * k); }},
        {"optimism", "optimistic plan reaches r* within budgets when p is in the set (1e-6)",
         [](double k) { return check_optimism(30, 20, 1e-6 * k); }},
    };
}

} // namespace cmdplab
