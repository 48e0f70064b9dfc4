#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cmdplab/error.hpp"
#include "cmdplab/lp.hpp"
#include "cmdplab/markov.hpp"

namespace cmdplab {

/// State-by-action table (rewards, costs, policies, occupation measures).
/// Row-major so each state's row is a contiguous span.
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Controlled transition probabilities p(s, a, s'), stored row-major so that
/// each p(s, a, .) is a contiguous span.
class TransitionTensor {
public:
    TransitionTensor() = default;
    TransitionTensor(std::size_t states, std::size_t actions)
        : states_(states), actions_(actions), data_(states * actions * states, 0.0) {}

    std::size_t states() const noexcept { return states_; }
    std::size_t actions() const noexcept { return actions_; }

    double& operator()(std::size_t s, std::size_t a, std::size_t next) {
        return data_[(s * actions_ + a) * states_ + next];
    }
    double operator()(std::size_t s, std::size_t a, std::size_t next) const {
        return data_[(s * actions_ + a) * states_ + next];
    }

    std::span<double> row(std::size_t s, std::size_t a) {
        return {data_.data() + (s * actions_ + a) * states_, states_};
    }
    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {data_.data() + (s * actions_ + a) * states_, states_};
    }

    const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const TransitionTensor&) const = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> data_;
};

/**
 * Tabular constrained MDP: transitions p, reward r, M cost tables c[i] and
 * budgets c_ub[i]. Rewards and costs may be any finite values.
 */
struct Cmdp {
    TransitionTensor p;
    Table r;
    std::vector<Table> c;
    std::vector<double> c_ub;

    std::size_t S() const noexcept { return p.states(); }
    std::size_t A() const noexcept { return p.actions(); }
    std::size_t M() const noexcept { return c.size(); }

    /// Throws ModelError if any invariant fails.
    void validate() const {
        if (S() == 0 || A() == 0) throw ModelError("CMDP needs at least one state and one action");
        if (static_cast<std::size_t>(r.rows()) != S() || static_cast<std::size_t>(r.cols()) != A())
            throw ModelError("reward table must be S x A");
        if (c_ub.size() != c.size()) throw ModelError("need one budget per cost table");
        for (std::size_t i = 0; i < M(); ++i) {
            if (static_cast<std::size_t>(c[i].rows()) != S() || static_cast<std::size_t>(c[i].cols()) != A())
                throw ModelError("cost table " + std::to_string(i) + " must be S x A");
            if (!c[i].allFinite() || !std::isfinite(c_ub[i]))
                throw ModelError("cost " + std::to_string(i) + " is not finite");
        }
        if (!r.allFinite()) throw ModelError("reward table is not finite");
        for (std::size_t s = 0; s < S(); ++s) {
            for (std::size_t a = 0; a < A(); ++a) {
                double sum = 0.0;
                for (double v : p.row(s, a)) {
                    if (!(v >= 0.0 && v <= 1.0))
                        throw ModelError("p(" + std::to_string(s) + "," + std::to_string(a) +
                                         ",.) has an entry outside [0,1]");
                    sum += v;
                }
                if (std::abs(sum - 1.0) > 1e-12)
                    throw ModelError("p(" + std::to_string(s) + "," + std::to_string(a) +
                                     ",.) sums to " + std::to_string(sum));
            }
        }
    }
};

/// Per-state action distribution pi(s, a).
struct StationaryPolicy {
    Table pi;

    std::size_t S() const noexcept { return static_cast<std::size_t>(pi.rows()); }
    std::size_t A() const noexcept { return static_cast<std::size_t>(pi.cols()); }
    std::span<const double> row(std::size_t s) const {
        return {pi.data() + s * A(), A()};
    }
};

/// Long-run state-action frequencies mu(s, a); sums to one.
struct OccupationMeasure {
    Table mu;
};

struct CmdpSolution {
    bool feasible = false;
    OccupationMeasure mu_star;
    double r_star = 0.0;
    std::vector<double> c_star;
    /// Multipliers of the M cost rows.
    std::vector<double> lambda_star;
    /// Dual objective rebuilt from every multiplier (cost, flow and
    /// normalization rows); equals r_star at optimality.
    double dual_objective = 0.0;
};

struct AverageValues {
    double reward = 0.0;
    std::vector<double> costs;
};

/// Gain and bias of one per-step value table under a fixed policy.
struct BiasResult {
    double gain = 0.0;
    Eigen::VectorXd v;
    std::size_t t0 = 0;
    double rho = 0.0;
    /// max_s |gain + v(s) - f(s) - (P v)(s)|
    double residual = 0.0;
};

inline StationaryPolicy uniform_policy(std::size_t S, std::size_t A) {
    return {Table::Constant(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A), 1.0 / static_cast<double>(A))};
}

inline StationaryPolicy deterministic_policy(const std::vector<std::size_t>& actions, std::size_t A) {
    Table pi = Table::Zero(static_cast<Eigen::Index>(actions.size()), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < actions.size(); ++s) pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    return {pi};
}

/// Transition matrix P_pi(s, s') = sum_a pi(s,a) p(s,a,s').
inline Eigen::MatrixXd induced_chain(const TransitionTensor& p, const StationaryPolicy& pol) {
    const auto S = static_cast<Eigen::Index>(p.states());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < pol.pi.cols(); ++a) {
            const double w = pol.pi(s, a);
            if (w == 0.0) continue;
            auto row = p.row(static_cast<std::size_t>(s), static_cast<std::size_t>(a));
            for (Eigen::Index n = 0; n < S; ++n) P(s, n) += w * row[static_cast<std::size_t>(n)];
        }
    return P;
}

/// f_pi(s) = sum_a pi(s,a) f(s,a).
inline Eigen::VectorXd induced_values(const Table& f, const StationaryPolicy& pol) {
    return (f.array() * pol.pi.array()).rowwise().sum();
}

/**
 * SR(mu): normalize each state's row of mu; states with zero mass play
 * `fallback_action` deterministically.
 */
inline StationaryPolicy sr_policy(const OccupationMeasure& m, std::size_t fallback_action = 0) {
    Table pi = Table::Zero(m.mu.rows(), m.mu.cols());
    for (Eigen::Index s = 0; s < m.mu.rows(); ++s) {
        const double mass = m.mu.row(s).sum();
        if (mass > 0.0)
            pi.row(s) = m.mu.row(s) / mass;
        else
            pi(s, static_cast<Eigen::Index>(fallback_action)) = 1.0;
    }
    return {pi};
}

/// Average reward and costs of a stationary policy. Throws ReducibleChain.
inline AverageValues average_values(const Cmdp& m, const StationaryPolicy& pol) {
    const Eigen::VectorXd d = stationary_distribution(induced_chain(m.p, pol));
    AverageValues out;
    out.reward = d.dot(induced_values(m.r, pol));
    for (const Table& ci : m.c) out.costs.push_back(d.dot(induced_values(ci, pol)));
    return out;
}

/// mu(s,a) = d(s) pi(s,a). Throws ReducibleChain.
inline OccupationMeasure occupation_of_policy(const Cmdp& m, const StationaryPolicy& pol) {
    const Eigen::VectorXd d = stationary_distribution(induced_chain(m.p, pol));
    return {pol.pi.array().colwise() * d.array()};
}

/// Index of mu(s, a) in the occupation-measure LP.
inline std::size_t occupation_var(std::size_t s, std::size_t a, std::size_t A) { return s * A + a; }

/**
 * LP over occupation measures with the flow-balance rows (one per state)
 * followed by the normalization row as equalities. Objective and cost rows
 * are left to the caller.
 */
inline LpProblem occupation_lp(const TransitionTensor& p) {
    const std::size_t S = p.states(), A = p.actions(), n = S * A;
    LpProblem lp(n);
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> row(n, 0.0);
        for (std::size_t a = 0; a < A; ++a) row[occupation_var(s, a, A)] += 1.0;
        for (std::size_t x = 0; x < S; ++x)
            for (std::size_t b = 0; b < A; ++b) row[occupation_var(x, b, A)] -= p(x, b, s);
        lp.add_eq(std::move(row), 0.0);
    }
    lp.add_eq(std::vector<double>(n, 1.0), 1.0);
    return lp;
}

inline std::vector<double> flatten(const Table& t) {
    std::vector<double> out(static_cast<std::size_t>(t.size()));
    for (Eigen::Index s = 0; s < t.rows(); ++s)
        for (Eigen::Index a = 0; a < t.cols(); ++a)
            out[static_cast<std::size_t>(s * t.cols() + a)] = t(s, a);
    return out;
}

inline Table unflatten(std::span<const double> x, std::size_t S, std::size_t A) {
    Table t(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) t(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = x[s * A + a];
    return t;
}

/**
 * Solves the CMDP by the occupation-measure LP: maximize sum mu r subject to
 * the M cost rows, flow balance, and normalization. lambda_star holds the
 * multipliers of the cost rows. Propagates NumericalFailure.
 */
inline CmdpSolution solve_cmdp(const Cmdp& m, const LpOptions& opt = {}) {
    LpProblem lp = occupation_lp(m.p);
    lp.objective = flatten(m.r);
    for (std::size_t i = 0; i < m.M(); ++i) lp.add_ineq(flatten(m.c[i]), m.c_ub[i]);

    const LpSolution sol = solve_lp(lp, opt);
    CmdpSolution out;
    if (sol.status != LpStatus::Optimal) {
        // The feasible set is a bounded polytope, so non-optimal means infeasible.
        out.feasible = false;
        return out;
    }
    out.feasible = true;
    out.mu_star = {unflatten(sol.x, m.S(), m.A())};
    out.r_star = sol.objective_value;
    for (const Table& ci : m.c) out.c_star.push_back((out.mu_star.mu.array() * ci.array()).sum());
    out.lambda_star = sol.dual_ineq;
    out.dual_objective = sol.dual_eq.back(); // normalization row has rhs 1; flow rows rhs 0
    for (std::size_t i = 0; i < m.M(); ++i) out.dual_objective += sol.dual_ineq[i] * m.c_ub[i];
    return out;
}

/**
 * Diameter: max over ordered pairs (s, s') of the minimal expected hitting
 * time of s' from s. Each target is handled by value iteration on the
 * stochastic-shortest-path problem with unit step cost, then polished by an
 * exact evaluation of the greedy policy.
 *
 * Throws NotCommunicating when some state cannot reach a target, or when a
 * hitting time exceeds `value_cap`.
 */
inline double compute_diameter(const Cmdp& m, double tol = 1e-9, double value_cap = 1e9) {
    const std::size_t S = m.S(), A = m.A();
    double diameter = 0.0;
    for (std::size_t target = 0; target < S; ++target) {
        // States that can reach the target along positive-probability edges.
        std::vector<bool> reach(S, false);
        reach[target] = true;
        for (bool grew = true; grew;) {
            grew = false;
            for (std::size_t x = 0; x < S; ++x) {
                if (reach[x]) continue;
                for (std::size_t a = 0; a < A && !reach[x]; ++a)
                    for (std::size_t y = 0; y < S; ++y)
                        if (reach[y] && m.p(x, a, y) > 0.0) {
                            reach[x] = grew = true;
                            break;
                        }
            }
        }
        if (std::find(reach.begin(), reach.end(), false) != reach.end())
            throw NotCommunicating("some state cannot reach state " + std::to_string(target));

        std::vector<double> h(S, 0.0), next(S, 0.0);
        std::vector<std::size_t> greedy(S, 0);
        for (std::size_t iter = 0;; ++iter) {
            double diff = 0.0;
            for (std::size_t x = 0; x < S; ++x) {
                if (x == target) {
                    next[x] = 0.0;
                    continue;
                }
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < A; ++a) {
                    double q = 1.0;
                    for (std::size_t y = 0; y < S; ++y) q += m.p(x, a, y) * h[y];
                    if (q < best) {
                        best = q;
                        greedy[x] = a;
                    }
                }
                next[x] = best;
                diff = std::max(diff, std::abs(next[x] - h[x]));
            }
            h.swap(next);
            if (*std::max_element(h.begin(), h.end()) > value_cap)
                throw NotCommunicating("hitting time to state " + std::to_string(target) + " exceeds cap");
            if (diff < tol) break;
            if (iter > 100'000'000) throw NotCommunicating("hitting-time iteration did not settle");
        }

        // Exact evaluation of the greedy policy: (I - P_g) h = 1 off the target.
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
        Eigen::VectorXd rhs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(S));
        for (std::size_t x = 0; x < S; ++x) {
            const auto xi = static_cast<Eigen::Index>(x);
            if (x == target) {
                rhs(xi) = 0.0;
                continue;
            }
            for (std::size_t y = 0; y < S; ++y)
                if (y != target) K(xi, static_cast<Eigen::Index>(y)) -= m.p(x, greedy[x], y);
        }
        const Eigen::VectorXd exact = K.fullPivLu().solve(rhs);
        bool use_exact = exact.allFinite();
        for (std::size_t x = 0; x < S && use_exact; ++x)
            use_exact = std::abs(exact(static_cast<Eigen::Index>(x)) - h[x]) < 1e-6 * (1.0 + h[x]);
        for (std::size_t x = 0; x < S; ++x)
            diameter = std::max(diameter, use_exact ? exact(static_cast<Eigen::Index>(x)) : h[x]);
    }
    return diameter;
}

/**
 * Solves the Poisson equation gain + v = f_pi + P_pi v with d . v = 0 for the
 * per-step values `f` (reward or any cost table), via the fundamental matrix.
 * Also reports the Doeblin constants t0 and rho of P_pi.
 *
 * Throws ReducibleChain, or PeriodicChain when no power P^t (t <= S^2) is
 * entrywise positive.
 */
inline BiasResult compute_bias(const TransitionTensor& p, const StationaryPolicy& pol, const Table& f) {
    const Eigen::MatrixXd P = induced_chain(p, pol);
    const Eigen::VectorXd d = stationary_distribution(P);
    const auto prim = find_primitivity(P);
    if (!prim) throw PeriodicChain("no entrywise-positive power of the induced chain up to S^2");

    const Eigen::VectorXd fv = induced_values(f, pol);
    BiasResult out;
    out.gain = d.dot(fv);
    out.t0 = prim->t0;
    out.rho = prim->rho;
    const Eigen::VectorXd centered = fv - Eigen::VectorXd::Constant(fv.size(), out.gain);
    out.v = fundamental_matrix(P, d) * centered;
    out.residual = (Eigen::VectorXd::Constant(fv.size(), out.gain) + out.v - fv - P * out.v).cwiseAbs().maxCoeff();
    return out;
}

inline BiasResult compute_bias(const Cmdp& m, const StationaryPolicy& pol) { return compute_bias(m.p, pol, m.r); }

/**
 * Two-state, two-action example. State 0 pays reward 2 and cost 1, state 1
 * pays reward 1 and cost 0. Action 0 in state 0 moves to state 1 with
 * probability theta; every other (state, action) pair moves uniformly.
 */
inline Cmdp two_state_cmdp(double theta, double c_ub) {
    Cmdp m;
    m.p = TransitionTensor(2, 2);
    m.p(0, 0, 0) = 1.0 - theta;
    m.p(0, 0, 1) = theta;
    const std::pair<std::size_t, std::size_t> uniform_pairs[] = {{0, 1}, {1, 0}, {1, 1}};
    for (auto [s, a] : uniform_pairs) {
        m.p(s, a, 0) = 0.5;
        m.p(s, a, 1) = 0.5;
    }
    m.r = Table(2, 2);
    m.r << 2.0, 2.0, 1.0, 1.0;
    Table cost(2, 2);
    cost << 1.0, 1.0, 0.0, 0.0;
    m.c = {cost};
    m.c_ub = {c_ub};
    return m;
}

} // namespace cmdplab
