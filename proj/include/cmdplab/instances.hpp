#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cmdplab/analysis.hpp"
#include "cmdplab/cmdp.hpp"
#include "cmdplab/lp.hpp"
#include "cmdplab/random.hpp"

namespace cmdplab {

/// Uniform draw from [lo, hi).
inline double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Uniform integer in [lo, hi].
inline std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.next() % (hi - lo + 1));
}

/// Flat Dirichlet sample via normalized exponentials; every entry is positive.
inline std::vector<double> random_distribution(Rng& rng, std::size_t n) {
    std::vector<double> out(n);
    double total = 0.0;
    for (double& v : out) {
        v = -std::log(1.0 - rng.uniform()) + 1e-12;
        total += v;
    }
    for (double& v : out) v /= total;
    return out;
}

/// Stochastic matrix with strictly positive entries (hence ergodic and aperiodic).
inline Eigen::MatrixXd random_ergodic_chain(Rng& rng, std::size_t n) {
    Eigen::MatrixXd P(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = random_distribution(rng, n);
        for (std::size_t j = 0; j < n; ++j) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return P;
}

/// Random full-support transitions, rewards and costs in [0,1).
inline Cmdp random_unconstrained_cmdp(Rng& rng, std::size_t S, std::size_t A, std::size_t M) {
    Cmdp m;
    m.p = TransitionTensor(S, A);
    m.r = Table(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    m.c.assign(M, Table(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A)));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = random_distribution(rng, S);
            std::copy(row.begin(), row.end(), m.p.row(s, a).begin());
            m.r(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = rng.uniform();
            for (auto& ci : m.c) ci(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = rng.uniform();
        }
    m.c_ub.assign(M, 1.0);
    return m;
}

/**
 * Random CMDP whose budgets sit a random fraction of the way between the
 * smallest and largest achievable average of each cost (or just above the
 * largest when the two nearly coincide). Draws are repeated
 * until some policy meets every budget with slack at least 1e-3, so each
 * instance is strictly feasible; most constraints still bind. `lo`, `hi`
 * bound the fraction.
 */
inline Cmdp random_feasible_cmdp(Rng& rng, std::size_t S, std::size_t A, std::size_t M, double lo = 0.1,
                                 double hi = 0.9) {
    while (true) {
        Cmdp m = random_unconstrained_cmdp(rng, S, A, M);
        std::vector<double> c_min(M), c_max(M);
        for (std::size_t i = 0; i < M; ++i) {
            LpProblem lp = occupation_lp(m.p);
            lp.objective = flatten(-m.c[i]);
            c_min[i] = -solve_lp(lp).objective_value;
            lp.objective = flatten(m.c[i]);
            c_max[i] = solve_lp(lp).objective_value;
        }
        for (int attempt = 0; attempt < 20; ++attempt) {
            for (std::size_t i = 0; i < M; ++i) {
                const double range = c_max[i] - c_min[i];
                m.c_ub[i] = range < 1e-2 ? c_max[i] + 1e-2 : c_min[i] + uniform_in(rng, lo, hi) * range;
            }
            if (max_min_slack(m).slack >= 1e-3) return m;
        }
    }
}

/**
 * Random bounded LP with n variables: a box x_j <= u_j, a few random
 * inequalities (possibly with negative right-hand sides) and, sometimes,
 * equality rows. May be infeasible, never unbounded.
 */
inline LpProblem random_bounded_lp(Rng& rng, std::size_t n, std::size_t max_ineq = 4, std::size_t max_eq = 2) {
    LpProblem lp(n);
    for (double& c : lp.objective) c = uniform_in(rng, -1.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> row(n, 0.0);
        row[j] = 1.0;
        lp.add_ineq(std::move(row), uniform_in(rng, 0.5, 5.0));
    }
    const std::size_t n_ineq = uniform_int(rng, 0, max_ineq);
    for (std::size_t k = 0; k < n_ineq; ++k) {
        std::vector<double> row(n);
        for (double& v : row) v = uniform_in(rng, -1.0, 1.0);
        lp.add_ineq(std::move(row), uniform_in(rng, -0.5, 2.0));
    }
    const std::size_t n_eq = std::min(uniform_int(rng, 0, max_eq), n);
    for (std::size_t k = 0; k < n_eq; ++k) {
        std::vector<double> row(n);
        for (double& v : row) v = uniform_in(rng, 0.0, 1.0);
        lp.add_eq(std::move(row), uniform_in(rng, 0.0, 2.0));
    }
    return lp;
}

} // namespace cmdplab
