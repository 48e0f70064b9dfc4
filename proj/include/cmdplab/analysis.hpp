#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/error.hpp"
#include "cmdplab/harness.hpp"
#include "cmdplab/lp.hpp"
#include "cmdplab/markov.hpp"

namespace cmdplab {

/// Largest achievable min_i (c_ub_i - sum mu c_i) and the measure attaining it.
struct SlackSolution {
    double slack = 0.0;
    OccupationMeasure mu;
};

/**
 * Max-min slack LP over occupation measures; the slack variable is split
 * into positive and negative parts so infeasible instances report a negative
 * value. With no cost constraints the slack is +infinity.
 */
inline SlackSolution max_min_slack(const Cmdp& m) {
    const std::size_t n = m.S() * m.A();
    SlackSolution out;
    if (m.M() == 0) {
        out.slack = std::numeric_limits<double>::infinity();
        out.mu = occupation_of_policy(m, uniform_policy(m.S(), m.A()));
        return out;
    }
    const LpProblem base = occupation_lp(m.p);
    LpProblem lp(n + 2);
    for (const auto& row : base.eq) {
        std::vector<double> ext = row.coeffs;
        ext.resize(n + 2, 0.0);
        lp.add_eq(std::move(ext), row.rhs);
    }
    lp.objective[n] = 1.0;
    lp.objective[n + 1] = -1.0;
    for (std::size_t i = 0; i < m.M(); ++i) {
        std::vector<double> row = flatten(m.c[i]);
        row.push_back(1.0);
        row.push_back(-1.0);
        lp.add_ineq(std::move(row), m.c_ub[i]);
    }
    const LpSolution sol = solve_lp(lp);
    if (!sol.optimal()) throw NumericalFailure("max-min slack LP did not reach an optimum");
    out.slack = sol.objective_value;
    out.mu = {unflatten(std::span<const double>(sol.x.data(), n), m.S(), m.A())};
    return out;
}

/// D(lambda) = max over occupation measures of sum mu (r - sum_i lambda_i c_i) + sum_i lambda_i c_ub_i.
inline double lagrangian_dual_value(const Cmdp& m, const std::vector<double>& lambda) {
    if (lambda.size() != m.M()) throw DimensionMismatch("need one multiplier per cost");
    Table reward = m.r;
    double constant = 0.0;
    for (std::size_t i = 0; i < m.M(); ++i) {
        reward -= lambda[i] * m.c[i];
        constant += lambda[i] * m.c_ub[i];
    }
    LpProblem lp = occupation_lp(m.p);
    lp.objective = flatten(reward);
    const LpSolution sol = solve_lp(lp);
    if (!sol.optimal()) throw NumericalFailure("unconstrained MDP LP did not reach an optimum");
    return sol.objective_value + constant;
}

struct DualCertificate {
    std::vector<double> lambda_star;
    double dual_value = 0.0;
    double primal_value = 0.0;
    double gap = 0.0;
};

/**
 * Strong-duality certificate: lambda* from the cost-row multipliers of the
 * occupation LP, D(lambda*) from an independent LP on the Lagrangian reward.
 * Throws NotStrictlyFeasible unless some policy keeps every cost at least
 * 1e-6 below its budget.
 */
inline DualCertificate dual_certificate(const Cmdp& m) {
    if (max_min_slack(m).slack <= 1e-6) throw NotStrictlyFeasible("no policy satisfies every budget strictly");
    const CmdpSolution sol = solve_cmdp(m);
    if (!sol.feasible) throw NotStrictlyFeasible("CMDP is infeasible");
    DualCertificate cert;
    cert.lambda_star = sol.lambda_star;
    cert.primal_value = sol.r_star;
    cert.dual_value = lagrangian_dual_value(m, sol.lambda_star);
    cert.gap = std::abs(cert.dual_value - cert.primal_value);
    return cert;
}

struct EtaValues {
    /// min_i (c_ub_i - epsilon - cbar_i(pi_feas)); non-positive means the
    /// strict-feasibility margin epsilon is not met.
    double eta = 0.0;
    /// max r - min r.
    double eta_hat = 0.0;
    StationaryPolicy pi_feas;
    bool assumption_holds = false;
};

/**
 * pi_feas is SR of the max-min slack measure, which makes eta as large as
 * possible. eta is reported even when non-positive; NotStrictlyFeasible is
 * thrown only when no policy meets the budgets at all.
 */
inline EtaValues eta_values(const Cmdp& m, double epsilon) {
    const SlackSolution slack = max_min_slack(m);
    if (slack.slack < -1e-9) throw NotStrictlyFeasible("CMDP is infeasible");
    EtaValues out;
    out.pi_feas = sr_policy(slack.mu);
    out.eta = slack.slack - epsilon;
    out.eta_hat = m.r.maxCoeff() - m.r.minCoeff();
    out.assumption_holds = out.eta > 0.0;
    return out;
}

/// max(1, max |r|, max |c_i|): rescales bounds stated for |r|, |c| < 1.
inline double magnitude_scale(const Cmdp& m) {
    double s = std::max(1.0, m.r.cwiseAbs().maxCoeff());
    for (const Table& ci : m.c) s = std::max(s, ci.cwiseAbs().maxCoeff());
    return s;
}

struct BoundInputs {
    std::uint64_t T = 2;
    std::size_t S = 1;
    std::size_t A = 1;
    std::size_t M = 0;
    double delta = 0.05;
    double eta = 1.0;
    double eta_hat = 0.0;
    /// Cost-regret budgets; empty means b_i = 34 for all i.
    std::vector<double> b;
    double diameter = 0.0;
    /// Multiplies the upper bounds (see magnitude_scale).
    double scale = 1.0;
};

struct BoundReport {
    std::uint64_t T = 0;
    std::size_t S = 0, A = 0, M = 0;
    double delta = 0.0;
    /// S sqrt(A T^1.5 log(T / delta))
    double base = 0.0;
    double theorem1_bound = 0.0;
    double theorem2_reward_bound = 0.0;
    std::vector<double> theorem2_cost_bounds;
    /// 0.015 sqrt(D S A), as stated with the lower-bound theorem.
    double theorem3_floor = 0.0;
    /// 0.015 sqrt(D S A T), as carried through its derivation.
    double theorem3_floor_with_T = 0.0;
};

inline BoundReport theorem_bounds(const BoundInputs& in) {
    if (in.T < 2) throw InvalidInputs("T must be at least 2");
    if (!(in.delta > 0.0 && in.delta < 1.0)) throw InvalidInputs("delta must lie in (0,1)");
    if (in.S == 0 || in.A == 0) throw InvalidInputs("S and A must be positive");
    if (!in.b.empty() && in.b.size() != in.M) throw InvalidInputs("need one budget b_i per cost");
    for (double v : in.b)
        if (!(v >= 0.0 && v <= 34.0)) throw InvalidInputs("budgets b_i must lie in [0, 34]");

    const double T = static_cast<double>(in.T);
    BoundReport rep;
    rep.T = in.T;
    rep.S = in.S;
    rep.A = in.A;
    rep.M = in.M;
    rep.delta = in.delta;
    rep.base = static_cast<double>(in.S) * std::sqrt(static_cast<double>(in.A) * std::pow(T, 1.5) * std::log(T / in.delta));
    rep.theorem1_bound = in.scale * 34.0 * rep.base;

    const double b_min = in.b.empty() ? 34.0 : *std::min_element(in.b.begin(), in.b.end());
    double reward_factor = 34.0;
    if (b_min < 34.0) {
        if (!(in.eta > 0.0)) throw InvalidInputs("eta must be positive when some b_i < 34");
        reward_factor += (34.0 - b_min) * in.eta_hat / in.eta;
    }
    rep.theorem2_reward_bound = in.scale * reward_factor * rep.base;
    for (std::size_t i = 0; i < in.M; ++i)
        rep.theorem2_cost_bounds.push_back(in.scale * (in.b.empty() ? 34.0 : in.b[i]) * rep.base);

    const double dsa = in.diameter * static_cast<double>(in.S * in.A);
    rep.theorem3_floor = 0.015 * std::sqrt(dsa);
    rep.theorem3_floor_with_T = 0.015 * std::sqrt(dsa * T);
    return rep;
}

/// Delta_R(T) + sum_i lambda_i Delta_i(T).
inline double weighted_regret(const RegretTrace& trace, const std::vector<double>& lambda) {
    const std::vector<double> cost = trace.cost_regret();
    if (lambda.size() != cost.size()) throw DimensionMismatch("need one multiplier per cost");
    double out = trace.reward_regret();
    for (std::size_t i = 0; i < lambda.size(); ++i) out += lambda[i] * cost[i];
    return out;
}

struct BoundaryPoint {
    double param = 0.0;
    double min_cost = 0.0;
    bool feasible = false;
};

/**
 * For each parameter value, the minimum achievable average of the first cost
 * (occupation LP without the cost row) and whether it meets that instance's
 * budget.
 */
inline std::vector<BoundaryPoint> feasibility_boundary(const std::function<Cmdp(double)>& family,
                                                       const std::vector<double>& grid) {
    std::vector<BoundaryPoint> out;
    for (double param : grid) {
        const Cmdp m = family(param);
        m.validate();
        if (m.M() == 0) throw InvalidInputs("family must have at least one cost");
        LpProblem lp = occupation_lp(m.p);
        lp.objective = flatten(-m.c[0]);
        const LpSolution sol = solve_lp(lp);
        if (!sol.optimal()) throw NumericalFailure("cost-minimizing LP did not reach an optimum");
        const double min_cost = -sol.objective_value;
        out.push_back({param, min_cost, min_cost <= m.c_ub[0] + 1e-12});
    }
    return out;
}

/**
 * Max-norm residual of d~ - d = d~ (P~ - P) (I - P + 1 d^T)^{-1}, with both
 * stationary distributions from linear solves.
 */
inline double perturbation_residual(const Eigen::MatrixXd& P, const Eigen::MatrixXd& P_tilde) {
    if (P.rows() != P_tilde.rows() || P.cols() != P_tilde.cols()) throw DimensionMismatch("chains differ in size");
    const Eigen::VectorXd d = stationary_distribution(P);
    const Eigen::VectorXd dt = stationary_distribution(P_tilde);
    const Eigen::MatrixXd Z = fundamental_matrix(P, d);
    const Eigen::RowVectorXd rhs = dt.transpose() * (P_tilde - P) * Z;
    return (dt.transpose() - d.transpose() - rhs).cwiseAbs().maxCoeff();
}

struct MixingReport {
    std::size_t t0 = 0;
    double rho = 0.0;
    /// max over s and t of TV(P^t(s,.), d) - (1 - rho)^floor(t / t0); <= 0 when the bound holds.
    double max_slack = -std::numeric_limits<double>::infinity();
    std::size_t worst_t = 0;
    bool holds = false;
};

/**
 * Checks TV(P^t(s,.), d) <= (1 - rho)^floor(t / t0) for all s and
 * t = 0 .. t_max, where TV is half the L1 distance. Throws PeriodicChain.
 */
inline MixingReport mixing_check(const Eigen::MatrixXd& P, std::size_t t_max, double tol = 1e-12) {
    const auto prim = find_primitivity(P);
    if (!prim) throw PeriodicChain("no entrywise-positive power up to S^2");
    const Eigen::VectorXd d = stationary_distribution(P);
    MixingReport rep;
    rep.t0 = prim->t0;
    rep.rho = prim->rho;
    Eigen::MatrixXd Pt = Eigen::MatrixXd::Identity(P.rows(), P.cols());
    for (std::size_t t = 0; t <= t_max; ++t) {
        const double bound = std::pow(1.0 - rep.rho, static_cast<double>(t / rep.t0));
        for (Eigen::Index s = 0; s < P.rows(); ++s) {
            const double tv = 0.5 * (Pt.row(s).transpose() - d).cwiseAbs().sum();
            if (tv - bound > rep.max_slack) {
                rep.max_slack = tv - bound;
                rep.worst_t = t;
            }
        }
        Pt = Pt * P;
    }
    rep.holds = rep.max_slack <= tol;
    return rep;
}

} // namespace cmdplab
