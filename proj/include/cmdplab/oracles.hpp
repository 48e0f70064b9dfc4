#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/lp.hpp"

// Brute-force reference solvers. Exponential in problem size; meant for
// cross-checking the simplex and occupation-LP code on small instances.

namespace cmdplab {

struct VertexResult {
    bool feasible = false;
    double objective = -std::numeric_limits<double>::infinity();
    std::vector<double> x;
    std::size_t vertices = 0;
};

/**
 * Maximizes over every basic feasible point: each choice of n active
 * constraints among the equalities (always active), the inequalities and
 * x >= 0. Correct for LPs whose feasible region is bounded.
 */
inline VertexResult enumerate_vertices(const LpProblem& lp, double feas_tol = 1e-9) {
    const std::size_t n = lp.num_vars;
    const std::size_t m_eq = lp.eq.size();
    const std::size_t m_in = lp.ineq.size();
    VertexResult out;
    if (m_eq > n) return out;
    const std::size_t pool = m_in + n;
    const std::size_t pick = n - m_eq;
    if (pick > pool) return out;

    // Row i of the optional pool: inequality i for i < m_in, else x_{i - m_in} = 0.
    std::vector<char> chosen(pool, 0);
    std::fill(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(pick), 1);
    Eigen::MatrixXd K(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    do {
        Eigen::Index row = 0;
        for (const auto& e : lp.eq) {
            for (std::size_t j = 0; j < n; ++j) K(row, static_cast<Eigen::Index>(j)) = e.coeffs[j];
            rhs(row++) = e.rhs;
        }
        for (std::size_t i = 0; i < pool; ++i) {
            if (!chosen[i]) continue;
            if (i < m_in) {
                for (std::size_t j = 0; j < n; ++j) K(row, static_cast<Eigen::Index>(j)) = lp.ineq[i].coeffs[j];
                rhs(row) = lp.ineq[i].rhs;
            } else {
                K.row(row).setZero();
                K(row, static_cast<Eigen::Index>(i - m_in)) = 1.0;
                rhs(row) = 0.0;
            }
            ++row;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (lu.rank() < static_cast<Eigen::Index>(n)) continue;
        const Eigen::VectorXd x = lu.solve(rhs);

        bool ok = (x.array() >= -feas_tol).all();
        for (std::size_t k = 0; ok && k < m_eq; ++k) {
            double v = 0.0;
            for (std::size_t j = 0; j < n; ++j) v += lp.eq[k].coeffs[j] * x(static_cast<Eigen::Index>(j));
            ok = std::abs(v - lp.eq[k].rhs) <= feas_tol * (1.0 + std::abs(lp.eq[k].rhs));
        }
        for (std::size_t k = 0; ok && k < m_in; ++k) {
            double v = 0.0;
            for (std::size_t j = 0; j < n; ++j) v += lp.ineq[k].coeffs[j] * x(static_cast<Eigen::Index>(j));
            ok = v <= lp.ineq[k].rhs + feas_tol * (1.0 + std::abs(lp.ineq[k].rhs));
        }
        if (!ok) continue;
        ++out.vertices;
        double obj = 0.0;
        for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * x(static_cast<Eigen::Index>(j));
        if (!out.feasible || obj > out.objective) {
            out.feasible = true;
            out.objective = obj;
            out.x.assign(x.data(), x.data() + x.size());
        }
    } while (std::prev_permutation(chosen.begin(), chosen.end()));
    return out;
}

struct PolicyGridResult {
    bool feasible = false;
    double r_star = -std::numeric_limits<double>::infinity();
    StationaryPolicy best;
    std::size_t evaluated = 0;
};

/**
 * Maximizes the average reward over stationary policies whose per-state
 * action probabilities are multiples of 1/resolution, keeping those whose
 * average costs meet every budget. Requires every policy to induce a
 * chain with a unique stationary distribution.
 */
inline PolicyGridResult policy_grid_search(const Cmdp& m, std::size_t resolution) {
    const std::size_t S = m.S(), A = m.A();
    // All compositions of `resolution` into A parts.
    std::vector<std::vector<double>> simplex;
    std::vector<std::size_t> parts(A, 0);
    auto fill = [&](auto&& self, std::size_t k, std::size_t left) -> void {
        if (k + 1 == A) {
            parts[k] = left;
            std::vector<double> row(A);
            for (std::size_t a = 0; a < A; ++a) row[a] = static_cast<double>(parts[a]) / static_cast<double>(resolution);
            simplex.push_back(std::move(row));
            return;
        }
        for (std::size_t v = 0; v <= left; ++v) {
            parts[k] = v;
            self(self, k + 1, left - v);
        }
    };
    fill(fill, 0, resolution);

    PolicyGridResult out;
    StationaryPolicy pol{Table(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A))};
    std::vector<std::size_t> idx(S, 0);
    while (true) {
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                pol.pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = simplex[idx[s]][a];
        const AverageValues v = average_values(m, pol);
        ++out.evaluated;
        bool ok = true;
        for (std::size_t i = 0; ok && i < m.M(); ++i) ok = v.costs[i] <= m.c_ub[i] + 1e-12;
        if (ok && v.reward > out.r_star) {
            out.feasible = true;
            out.r_star = v.reward;
            out.best = pol;
        }
        std::size_t s = 0;
        while (s < S && ++idx[s] == simplex.size()) idx[s++] = 0;
        if (s == S) break;
    }
    return out;
}

} // namespace cmdplab
