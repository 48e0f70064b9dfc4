#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "cmdplab/error.hpp"

namespace cmdplab {

/// One linear row `coeffs . x  (= or <=)  rhs`.
struct LinearConstraint {
    std::vector<double> coeffs;
    double rhs = 0.0;
};

/**
 * Dense LP in the form
 *
 *     maximize    objective . x
 *     subject to  eq[k].coeffs . x  = eq[k].rhs
 *                 ineq[i].coeffs . x <= ineq[i].rhs
 *                 x >= 0
 */
struct LpProblem {
    std::size_t num_vars = 0;
    std::vector<double> objective;
    std::vector<LinearConstraint> eq;
    std::vector<LinearConstraint> ineq;

    explicit LpProblem(std::size_t n = 0) : num_vars(n), objective(n, 0.0) {}

    void add_eq(std::vector<double> coeffs, double rhs) { eq.push_back({std::move(coeffs), rhs}); }
    void add_ineq(std::vector<double> coeffs, double rhs) { ineq.push_back({std::move(coeffs), rhs}); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

/**
 * Result of solve_lp. `x`, `objective_value` and the duals are meaningful only
 * when status is Optimal. `dual_ineq[i] >= 0` is the multiplier of ineq row i;
 * `dual_eq[k]` (free sign) belongs to eq row k. At optimality
 * `dual_eq . b_eq + dual_ineq . b_ineq == objective_value`.
 */
struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
    std::vector<double> dual_ineq;
    std::vector<double> dual_eq;
    std::size_t iterations = 0;

    bool optimal() const noexcept { return status == LpStatus::Optimal; }
};

struct LpOptions {
    /// Primal feasibility tolerance (absolute, on unit-scale rows).
    double feasibility_tol = 1e-9;
    /// Duality-gap / complementary slackness tolerance.
    double duality_tol = 1e-7;
    /// Entries smaller than this are never used as pivots.
    double pivot_tol = 1e-11;
    /// Reduced costs above this are considered improving.
    double reduced_cost_tol = 1e-11;
    /// 0 selects the default cap 10 * (num_vars + num_constraints)^2.
    std::size_t max_iterations = 0;
};

namespace detail {

/// Dense simplex tableau. Columns: original vars, one slack per inequality,
/// one artificial per row that needs it, then the right-hand side.
class Tableau {
public:
    Tableau(const LpProblem& lp, const LpOptions& opt) : opt_(opt) {
        n_ = lp.num_vars;
        n_eq_ = lp.eq.size();
        n_ineq_ = lp.ineq.size();
        m_ = n_eq_ + n_ineq_;

        // Rows: equalities first, then inequalities.
        sign_.assign(m_, 1.0);
        std::vector<bool> needs_art(m_, false);
        for (std::size_t k = 0; k < n_eq_; ++k) {
            if (lp.eq[k].rhs < 0) sign_[k] = -1.0;
            needs_art[k] = true;
        }
        for (std::size_t i = 0; i < n_ineq_; ++i) {
            if (lp.ineq[i].rhs < 0) {
                sign_[n_eq_ + i] = -1.0;
                needs_art[n_eq_ + i] = true;
            }
        }
        art_col_.assign(m_, npos);
        std::size_t n_art = 0;
        for (std::size_t r = 0; r < m_; ++r)
            if (needs_art[r]) art_col_[r] = n_ + n_ineq_ + n_art++;
        first_art_ = n_ + n_ineq_;
        cols_ = first_art_ + n_art;
        width_ = cols_ + 1;

        data_.assign((m_ + 1) * width_, 0.0);
        basis_.assign(m_, npos);
        for (std::size_t r = 0; r < m_; ++r) {
            const LinearConstraint& row = r < n_eq_ ? lp.eq[r] : lp.ineq[r - n_eq_];
            const double s = sign_[r];
            for (std::size_t j = 0; j < n_; ++j) at(r, j) = s * row.coeffs[j];
            at(r, cols_) = s * row.rhs;
            if (r >= n_eq_) at(r, n_ + (r - n_eq_)) = s;
            if (art_col_[r] != npos) {
                at(r, art_col_[r]) = 1.0;
                basis_[r] = art_col_[r];
            } else {
                basis_[r] = n_ + (r - n_eq_);
            }
        }
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }
    /// Objective row holds reduced costs d_j = c_j - y.A_j, and -z in the rhs slot.
    double& obj(std::size_t c) { return data_[m_ * width_ + c]; }
    double obj(std::size_t c) const { return data_[m_ * width_ + c]; }

    void set_costs(const std::vector<double>& cost) {
        for (std::size_t j = 0; j <= cols_; ++j) obj(j) = j < cols_ ? cost[j] : 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            const double cb = cost[basis_[r]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= cols_; ++j) obj(j) -= cb * at(r, j);
        }
    }

    void pivot(std::size_t r, std::size_t e) {
        const double piv = at(r, e);
        for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= piv;
        at(r, e) = 1.0;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            double* row = &data_[i * width_];
            const double f = row[e];
            if (f == 0.0) continue;
            const double* prow = &data_[r * width_];
            for (std::size_t j = 0; j <= cols_; ++j) row[j] -= f * prow[j];
            row[e] = 0.0;
        }
        basis_[r] = e;
    }

    enum class Outcome { Optimal, Unbounded };

    /**
     * Primal simplex iterations. The entering column is the one with the
     * largest reduced cost; after `bland_after` consecutive degenerate pivots
     * the lowest-index improving column is used instead until the objective
     * moves again, which rules out cycling. The ratio test is two-pass: rows
     * within a small tolerance of the minimum ratio are candidates, and the
     * largest pivot among them leaves (lowest basic index in Bland mode,
     * restricted to pivots of comparable size).
     */
    Outcome optimize(std::size_t allowed_cols, std::size_t& iterations, std::size_t cap) {
        constexpr std::size_t bland_after = 50;
        std::size_t degenerate_run = 0;
        for (;;) {
            const bool bland = degenerate_run >= bland_after;
            std::size_t e = npos;
            double best_rc = opt_.reduced_cost_tol;
            for (std::size_t j = 0; j < allowed_cols; ++j) {
                if (obj(j) <= opt_.reduced_cost_tol) continue;
                if (bland) {
                    e = j;
                    break;
                }
                if (obj(j) > best_rc) {
                    best_rc = obj(j);
                    e = j;
                }
            }
            if (e == npos) return Outcome::Optimal;

            double min_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m_; ++r) {
                const double a = at(r, e);
                if (a <= opt_.pivot_tol) continue;
                min_ratio = std::min(min_ratio, (std::max(at(r, cols_), 0.0) + opt_.feasibility_tol) / a);
            }
            if (!std::isfinite(min_ratio)) return Outcome::Unbounded;

            double max_pivot = 0.0;
            for (std::size_t r = 0; r < m_; ++r) {
                const double a = at(r, e);
                if (a > opt_.pivot_tol && std::max(at(r, cols_), 0.0) / a <= min_ratio) max_pivot = std::max(max_pivot, a);
            }
            std::size_t leave = npos;
            for (std::size_t r = 0; r < m_; ++r) {
                const double a = at(r, e);
                if (a <= opt_.pivot_tol || std::max(at(r, cols_), 0.0) / a > min_ratio) continue;
                if (bland) {
                    if (a >= 1e-3 * max_pivot && (leave == npos || basis_[r] < basis_[leave])) leave = r;
                } else if (leave == npos || a > at(leave, e)) {
                    leave = r;
                }
            }
            if (++iterations > cap)
                throw NumericalFailure("simplex exceeded iteration cap of " + std::to_string(cap));
            const double step = std::max(at(leave, cols_), 0.0) / at(leave, e);
            degenerate_run = step * obj(e) > 1e-12 ? 0 : degenerate_run + 1;
            pivot(leave, e);
        }
    }

    /// After phase 1, pivot basic artificials out of the basis on any usable
    /// structural or slack column. Rows with none left are redundant.
    void expel_artificials() {
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < first_art_) continue;
            std::size_t best = npos;
            double best_abs = opt_.pivot_tol * 100.0;
            for (std::size_t j = 0; j < first_art_; ++j) {
                const double a = std::abs(at(r, j));
                if (a > best_abs) {
                    best_abs = a;
                    best = j;
                }
            }
            if (best != npos) pivot(r, best);
        }
    }

    std::size_t n_, n_eq_, n_ineq_, m_, cols_, width_, first_art_;
    std::vector<double> data_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> art_col_;
    std::vector<double> sign_;
    LpOptions opt_;
};

inline void validate(const LpProblem& lp) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (lp.objective.size() != lp.num_vars)
        throw MalformedProblem("objective has length " + std::to_string(lp.objective.size()) +
                               ", expected " + std::to_string(lp.num_vars));
    if (!std::all_of(lp.objective.begin(), lp.objective.end(), finite))
        throw MalformedProblem("objective contains non-finite values");
    auto check_rows = [&](const std::vector<LinearConstraint>& rows, const char* kind) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].coeffs.size() != lp.num_vars)
                throw MalformedProblem(std::string(kind) + " row " + std::to_string(i) + " has " +
                                       std::to_string(rows[i].coeffs.size()) + " coefficients, expected " +
                                       std::to_string(lp.num_vars));
            if (!finite(rows[i].rhs) ||
                !std::all_of(rows[i].coeffs.begin(), rows[i].coeffs.end(), finite))
                throw MalformedProblem(std::string(kind) + " row " + std::to_string(i) +
                                       " contains non-finite values");
        }
    };
    check_rows(lp.eq, "equality");
    check_rows(lp.ineq, "inequality");
}

} // namespace detail

/**
 * Two-phase dense simplex (largest-coefficient pricing with a Bland fallback
 * on degenerate stalls).
 *
 * Throws MalformedProblem on dimension mismatch and NumericalFailure when the
 * iteration cap is exceeded or the final point violates a constraint by more
 * than the feasibility tolerance (scaled by the row magnitude).
 */
inline LpSolution solve_lp(const LpProblem& lp, const LpOptions& opt = {}) {
    detail::validate(lp);
    detail::Tableau tab(lp, opt);
    const std::size_t m = tab.m_;
    const std::size_t total = lp.num_vars + m;
    const std::size_t cap = opt.max_iterations ? opt.max_iterations : 10 * total * total + 10;

    LpSolution sol;

    // Phase 1: maximize -(sum of artificials).
    if (tab.cols_ > tab.first_art_) {
        std::vector<double> cost(tab.cols_, 0.0);
        for (std::size_t j = tab.first_art_; j < tab.cols_; ++j) cost[j] = -1.0;
        tab.set_costs(cost);
        tab.optimize(tab.cols_, sol.iterations, cap);
        double rhs_scale = 1.0;
        for (std::size_t r = 0; r < m; ++r) rhs_scale = std::max(rhs_scale, std::abs(tab.at(r, tab.cols_)));
        const double infeasibility = tab.obj(tab.cols_); // equals sum of artificials
        if (infeasibility > opt.feasibility_tol * rhs_scale) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        tab.expel_artificials();
    }

    // Phase 2: original objective, artificials barred from entering.
    std::vector<double> cost(tab.cols_, 0.0);
    std::copy(lp.objective.begin(), lp.objective.end(), cost.begin());
    tab.set_costs(cost);
    if (tab.optimize(tab.first_art_, sol.iterations, cap) == detail::Tableau::Outcome::Unbounded) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    sol.status = LpStatus::Optimal;
    sol.x.assign(lp.num_vars, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t b = tab.basis_[r];
        if (b < lp.num_vars) sol.x[b] = tab.at(r, tab.cols_);
    }
    for (double& v : sol.x)
        if (v < 0.0 && v > -opt.feasibility_tol) v = 0.0;

    sol.objective_value = 0.0;
    for (std::size_t j = 0; j < lp.num_vars; ++j) sol.objective_value += lp.objective[j] * sol.x[j];

    sol.dual_ineq.assign(tab.n_ineq_, 0.0);
    for (std::size_t i = 0; i < tab.n_ineq_; ++i) sol.dual_ineq[i] = std::max(0.0, -tab.obj(lp.num_vars + i));
    sol.dual_eq.assign(tab.n_eq_, 0.0);
    for (std::size_t k = 0; k < tab.n_eq_; ++k) sol.dual_eq[k] = -tab.obj(tab.art_col_[k]) * tab.sign_[k];

    // Post-solve primal check.
    auto check = [&](const LinearConstraint& row, bool equality) {
        double lhs = 0.0, scale = 1.0 + std::abs(row.rhs);
        for (std::size_t j = 0; j < lp.num_vars; ++j) {
            lhs += row.coeffs[j] * sol.x[j];
            scale += std::abs(row.coeffs[j] * sol.x[j]);
        }
        const double viol = equality ? std::abs(lhs - row.rhs) : lhs - row.rhs;
        if (viol > 100.0 * opt.feasibility_tol * scale)
            throw NumericalFailure("simplex solution violates a constraint by " + std::to_string(viol));
    };
    for (const auto& row : lp.eq) check(row, true);
    for (const auto& row : lp.ineq) check(row, false);
    for (double v : sol.x)
        if (v < -100.0 * opt.feasibility_tol) throw NumericalFailure("simplex solution has negative component");
    return sol;
}

} // namespace cmdplab
