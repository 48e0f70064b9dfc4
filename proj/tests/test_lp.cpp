#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cmdplab/instances.hpp"
#include "cmdplab/lp.hpp"
#include "cmdplab/oracles.hpp"

using namespace cmdplab;

TEST(SolveLp, SingleUpperBound) {
    LpProblem lp(1);
    lp.objective = {1.0};
    lp.add_ineq({1.0}, 1.0);
    const LpSolution sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.x[0], 1.0, 1e-12);
    EXPECT_NEAR(sol.objective_value, 1.0, 1e-12);
}

TEST(SolveLp, NegativeBoundIsInfeasible) {
    LpProblem lp(1);
    lp.objective = {1.0};
    lp.add_ineq({1.0}, -1.0);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(SolveLp, TwoVariableExampleMatchesHandVertices) {
    LpProblem lp(2);
    lp.objective = {3.0, 2.0};
    lp.add_ineq({1.0, 1.0}, 4.0);
    lp.add_ineq({1.0, 0.0}, 3.0);

    // Vertices of {x >= 0, x1 + x2 <= 4, x1 <= 3}: (0,0), (3,0), (3,1), (0,4).
    const double vertices[4][2] = {{0, 0}, {3, 0}, {3, 1}, {0, 4}};
    double best = -1.0;
    for (const auto& v : vertices) best = std::max(best, 3.0 * v[0] + 2.0 * v[1]);
    ASSERT_DOUBLE_EQ(best, 11.0);

    const LpSolution sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.objective_value, best, 1e-12);
    EXPECT_NEAR(sol.x[0], 3.0, 1e-12);
    EXPECT_NEAR(sol.x[1], 1.0, 1e-12);
}

TEST(SolveLp, UnboundedDirection) {
    LpProblem lp(2);
    lp.objective = {1.0, 0.0};
    lp.add_ineq({0.0, 1.0}, 1.0);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Unbounded);
}

TEST(SolveLp, EqualityRowsAndDuals) {
    // max x1 + 2 x2  s.t.  x1 + x2 = 1,  x2 <= 0.25
    LpProblem lp(2);
    lp.objective = {1.0, 2.0};
    lp.add_eq({1.0, 1.0}, 1.0);
    lp.add_ineq({0.0, 1.0}, 0.25);
    const LpSolution sol = solve_lp(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.objective_value, 1.25, 1e-12);
    // Raising the x2 cap by h gains h (x2 worth 2, x1 worth 1).
    EXPECT_NEAR(sol.dual_ineq[0], 1.0, 1e-9);
    EXPECT_NEAR(sol.dual_eq[0], 1.0, 1e-9);
    EXPECT_NEAR(sol.dual_eq[0] * 1.0 + sol.dual_ineq[0] * 0.25, sol.objective_value, 1e-9);
}

TEST(SolveLp, NegativeRhsEqualityIsHandled) {
    // -x1 - x2 = -2 is x1 + x2 = 2.
    LpProblem lp(2);
    lp.objective = {1.0, -1.0};
    lp.add_eq({-1.0, -1.0}, -2.0);
    const LpSolution sol = solve_lp(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.objective_value, 2.0, 1e-12);
    EXPECT_NEAR(sol.dual_eq[0] * -2.0, 2.0, 1e-9);
}

TEST(SolveLp, InconsistentEqualitiesAreInfeasible) {
    LpProblem lp(2);
    lp.add_eq({1.0, 1.0}, 1.0);
    lp.add_eq({1.0, 1.0}, 2.0);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(SolveLp, RedundantEqualitiesAreTolerated) {
    LpProblem lp(2);
    lp.objective = {1.0, 0.0};
    lp.add_eq({1.0, 1.0}, 1.0);
    lp.add_eq({2.0, 2.0}, 2.0);
    const LpSolution sol = solve_lp(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.objective_value, 1.0, 1e-12);
}

TEST(SolveLp, BealeCyclingExampleTerminates) {
    // Classic instance on which Dantzig's rule cycles; the minimum of
    // -3/4 x4 + 20 x5 - 1/2 x6 + 6 x7 is -5/4 at x4 = 1, x6 = 1.
    LpProblem lp(4);
    lp.objective = {0.75, -20.0, 0.5, -6.0};
    lp.add_ineq({0.25, -8.0, -1.0, 9.0}, 0.0);
    lp.add_ineq({0.5, -12.0, -0.5, 3.0}, 0.0);
    lp.add_ineq({0.0, 0.0, 1.0, 0.0}, 1.0);
    const LpSolution sol = solve_lp(lp);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.objective_value, 1.25, 1e-12);
}

TEST(SolveLp, MalformedProblems) {
    LpProblem lp(2);
    lp.add_ineq({1.0}, 1.0);
    EXPECT_THROW(solve_lp(lp), MalformedProblem);

    LpProblem nan_rhs(1);
    nan_rhs.add_ineq({1.0}, std::numeric_limits<double>::quiet_NaN());
    EXPECT_THROW(solve_lp(nan_rhs), MalformedProblem);

    LpProblem short_objective(2);
    short_objective.objective = {1.0};
    EXPECT_THROW(solve_lp(short_objective), MalformedProblem);
}

TEST(SolveLp, IterationCapRaisesNumericalFailure) {
    LpProblem lp(3);
    lp.objective = {1.0, 1.0, 1.0};
    for (int j = 0; j < 3; ++j) {
        std::vector<double> row(3, 0.0);
        row[j] = 1.0;
        lp.add_ineq(row, 1.0);
    }
    LpOptions opt;
    opt.max_iterations = 1;
    EXPECT_THROW(solve_lp(lp, opt), NumericalFailure);
}

TEST(SolveLp, MatchesVertexEnumerationOnRandomLps) {
    Rng rng(101, Rng::Instances);
    int optimal = 0;
    for (int k = 0; k < 200; ++k) {
        const LpProblem lp = random_bounded_lp(rng, uniform_int(rng, 1, 10));
        const LpSolution sol = solve_lp(lp);
        const VertexResult ref = enumerate_vertices(lp);
        if (!ref.feasible) {
            EXPECT_EQ(sol.status, LpStatus::Infeasible) << "trial " << k;
            continue;
        }
        ASSERT_EQ(sol.status, LpStatus::Optimal) << "trial " << k;
        EXPECT_NEAR(sol.objective_value, ref.objective, 1e-7) << "trial " << k;
        ++optimal;
    }
    EXPECT_GT(optimal, 100);
}

TEST(SolveLp, WeakDualityAndComplementarySlackness) {
    Rng rng(102, Rng::Instances);
    for (int k = 0; k < 200; ++k) {
        const LpProblem lp = random_bounded_lp(rng, uniform_int(rng, 1, 8), 4, 0);
        const LpSolution sol = solve_lp(lp);
        if (!sol.optimal()) continue;
        const std::size_t n = lp.num_vars;
        double dual_bound = 0.0;
        for (std::size_t i = 0; i < lp.ineq.size(); ++i) {
            EXPECT_GE(sol.dual_ineq[i], -1e-9);
            dual_bound += sol.dual_ineq[i] * lp.ineq[i].rhs;
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += lp.ineq[i].coeffs[j] * sol.x[j];
            EXPECT_LE(row, lp.ineq[i].rhs + 1e-9);
            EXPECT_NEAR(sol.dual_ineq[i] * (lp.ineq[i].rhs - row), 0.0, 1e-7);
        }
        // Dual feasibility: A^T y >= c.
        for (std::size_t j = 0; j < n; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < lp.ineq.size(); ++i) col += lp.ineq[i].coeffs[j] * sol.dual_ineq[i];
            EXPECT_GE(col, lp.objective[j] - 1e-7);
        }
        EXPECT_GE(dual_bound, sol.objective_value - 1e-6);
        EXPECT_NEAR(dual_bound, sol.objective_value, 1e-7);
    }
}

TEST(SolveLp, DeterministicBitForBit) {
    Rng rng(103, Rng::Instances);
    const LpProblem lp = random_bounded_lp(rng, 8);
    const LpSolution a = solve_lp(lp), b = solve_lp(lp);
    ASSERT_EQ(a.status, b.status);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.dual_ineq, b.dual_ineq);
    EXPECT_EQ(a.objective_value, b.objective_value);
}

TEST(VertexEnumeration, SmallSquare) {
    LpProblem lp(2);
    lp.objective = {1.0, 1.0};
    lp.add_ineq({1.0, 0.0}, 2.0);
    lp.add_ineq({0.0, 1.0}, 3.0);
    const VertexResult r = enumerate_vertices(lp);
    ASSERT_TRUE(r.feasible);
    EXPECT_DOUBLE_EQ(r.objective, 5.0);
    EXPECT_EQ(r.vertices, 4u);
}
