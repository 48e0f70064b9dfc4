#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "cmdplab/error.hpp"

namespace cmdplab {

/**
 * Stationary distribution of a row-stochastic matrix P, from d^T (I - P) = 0
 * with sum(d) = 1. The system is solved by LU with partial pivoting after
 * replacing one balance equation with the normalization row.
 *
 * Throws ReducibleChain if (I - P) has more than one null direction, i.e. the
 * chain has several recurrent classes and d is not unique.
 */
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P, double rank_tol = 1e-10) {
    const Eigen::Index n = P.rows();
    if (n == 1) return Eigen::VectorXd::Ones(1);
    const Eigen::MatrixXd B = (Eigen::MatrixXd::Identity(n, n) - P).transpose();

    Eigen::FullPivLU<Eigen::MatrixXd> rank_check(B);
    rank_check.setThreshold(rank_tol);
    if (rank_check.rank() < n - 1)
        throw ReducibleChain("chain has " + std::to_string(n - rank_check.rank()) + " recurrent classes");

    Eigen::MatrixXd system = B;
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::VectorXd d = system.partialPivLu().solve(rhs);
    for (Eigen::Index i = 0; i < n; ++i)
        if (d(i) < 0.0 && d(i) > -1e-12) d(i) = 0.0;
    return d;
}

/// Smallest t0 with all entries of P^t0 positive, and rho = min_ij P^t0(i,j).
struct Primitivity {
    std::size_t t0 = 0;
    double rho = 0.0;
};

/// Searches t = 1 .. S^2 (Wielandt's bound (S-1)^2 + 1 is covered).
inline std::optional<Primitivity> find_primitivity(const Eigen::MatrixXd& P) {
    const Eigen::Index n = P.rows();
    const std::size_t limit = static_cast<std::size_t>(n * n);
    Eigen::MatrixXd Pt = P;
    for (std::size_t t = 1; t <= std::max<std::size_t>(limit, 1); ++t) {
        if ((Pt.array() > 0.0).all()) return Primitivity{t, Pt.minCoeff()};
        Pt = Pt * P;
    }
    return std::nullopt;
}

/// Fundamental matrix (I - P + 1 d^T)^{-1}.
inline Eigen::MatrixXd fundamental_matrix(const Eigen::MatrixXd& P, const Eigen::VectorXd& d) {
    const Eigen::Index n = P.rows();
    const Eigen::MatrixXd K =
        Eigen::MatrixXd::Identity(n, n) - P + Eigen::VectorXd::Ones(n) * d.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) throw SingularFundamentalMatrix("I - P + 1 d^T is singular");
    return lu.inverse();
}

} // namespace cmdplab
