#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/error.hpp"

namespace cmdplab {

/**
 * Visit counts N_t(s,a) and transition counts N_t(s,a,s') over completed
 * transitions. `t()` is the 1-based current time: it starts at 1 and advances
 * by one per recorded transition, so both counters always cover l < t.
 */
class TransitionCounts {
public:
    TransitionCounts() = default;
    TransitionCounts(std::size_t states, std::size_t actions)
        : states_(states), actions_(actions), n_sa_(states * actions, 0), n_sas_(states * actions * states, 0) {}

    std::size_t states() const noexcept { return states_; }
    std::size_t actions() const noexcept { return actions_; }
    std::uint64_t t() const noexcept { return t_; }

    std::uint64_t n(std::size_t s, std::size_t a) const { return n_sa_[s * actions_ + a]; }
    std::uint64_t n(std::size_t s, std::size_t a, std::size_t next) const {
        return n_sas_[(s * actions_ + a) * states_ + next];
    }

    /// Throws IndexOutOfRange.
    void record(std::size_t s, std::size_t a, std::size_t next) {
        if (s >= states_ || next >= states_ || a >= actions_)
            throw IndexOutOfRange("transition (" + std::to_string(s) + "," + std::to_string(a) + "," +
                                  std::to_string(next) + ") out of range");
        ++n_sa_[s * actions_ + a];
        ++n_sas_[(s * actions_ + a) * states_ + next];
        ++t_;
    }

    std::uint64_t total_visits() const {
        std::uint64_t total = 0;
        for (auto v : n_sa_) total += v;
        return total;
    }

    bool operator==(const TransitionCounts&) const = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::uint64_t t_ = 1;
    std::vector<std::uint64_t> n_sa_;
    std::vector<std::uint64_t> n_sas_;
};

/// p_hat(s,a,s') = N(s,a,s') / max(N(s,a), 1). Unvisited rows are all zero.
inline TransitionTensor empirical_estimate(const TransitionCounts& counts) {
    const std::size_t S = counts.states(), A = counts.actions();
    TransitionTensor p_hat(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double denom = static_cast<double>(std::max<std::uint64_t>(counts.n(s, a), 1));
            for (std::size_t x = 0; x < S; ++x) p_hat(s, a, x) = static_cast<double>(counts.n(s, a, x)) / denom;
        }
    return p_hat;
}

/// eps_t(s,a) = sqrt(14 S log(2 A t / delta) / max(N_t(s,a), 1)).
inline double confidence_radius(std::uint64_t n_visits, std::uint64_t t, double delta, std::size_t S, std::size_t A) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidDelta("delta must lie in (0,1), got " + std::to_string(delta));
    if (t < 1) throw InvalidInputs("time index must be >= 1");
    const double log_term = std::log(2.0 * static_cast<double>(A) * static_cast<double>(t) / delta);
    return std::sqrt(14.0 * static_cast<double>(S) * log_term /
                     static_cast<double>(std::max<std::uint64_t>(n_visits, 1)));
}

inline double confidence_radius(const TransitionCounts& counts, std::size_t s, std::size_t a, double delta,
                                std::size_t S, std::size_t A) {
    return confidence_radius(counts.n(s, a), counts.t(), delta, S, A);
}

/// Immutable snapshot of the L1 confidence set around p_hat.
struct ConfidenceSet {
    TransitionTensor p_hat;
    Table eps;
    double delta = 0.05;
    std::uint64_t t = 1;
};

inline ConfidenceSet make_confidence_set(const TransitionCounts& counts, double delta) {
    ConfidenceSet cs;
    cs.p_hat = empirical_estimate(counts);
    cs.delta = delta;
    cs.t = counts.t();
    const std::size_t S = counts.states(), A = counts.actions();
    cs.eps = Table(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            cs.eps(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
                confidence_radius(counts, s, a, delta, S, A);
    return cs;
}

/// L1 distance of p(s,a,.) from p_hat(s,a,.).
inline double l1_distance(const TransitionTensor& p, const TransitionTensor& q, std::size_t s, std::size_t a) {
    double dist = 0.0;
    auto pr = p.row(s, a), qr = q.row(s, a);
    for (std::size_t x = 0; x < pr.size(); ++x) dist += std::abs(pr[x] - qr[x]);
    return dist;
}

/// True iff every row of p lies in its L1 ball (slack 1e-12). Throws DimensionMismatch.
inline bool contains(const ConfidenceSet& cs, const TransitionTensor& p) {
    if (p.states() != cs.p_hat.states() || p.actions() != cs.p_hat.actions())
        throw DimensionMismatch("transition tensor shape does not match the confidence set");
    for (std::size_t s = 0; s < p.states(); ++s)
        for (std::size_t a = 0; a < p.actions(); ++a)
            if (l1_distance(p, cs.p_hat, s, a) > cs.eps(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) + 1e-12)
                return false;
    return true;
}

} // namespace cmdplab
