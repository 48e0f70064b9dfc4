#pragma once

#include <algorithm>
#include <limits>

// Closed forms for the two-state example, written independently of the
// library. u is the probability of action 0 in state 0; every other pair
// moves uniformly, so the chain leaves state 0 w.p. q = u theta + (1-u)/2
// and leaves state 1 w.p. 1/2.

namespace two_state {

inline double leave_prob(double theta, double u) { return u * theta + (1.0 - u) * 0.5; }

/// Stationary mass of state 0.
inline double d0(double theta, double u) { return 0.5 / (leave_prob(theta, u) + 0.5); }

inline double reward(double theta, double u) { return 1.0 + d0(theta, u); }
inline double cost(double theta, double u) { return d0(theta, u); }

struct GridOptimum {
    bool feasible = false;
    double r_star = -std::numeric_limits<double>::infinity();
    double u = 0.0;
};

/// Maximizes the reward over u on a grid with the given step.
inline GridOptimum grid_optimum(double theta, double c_ub, double step = 1e-4) {
    GridOptimum best;
    const int n = static_cast<int>(1.0 / step + 0.5);
    for (int k = 0; k <= n; ++k) {
        const double u = static_cast<double>(k) / n;
        if (cost(theta, u) > c_ub + 1e-12) continue;
        if (reward(theta, u) > best.r_star) best = {true, reward(theta, u), u};
    }
    return best;
}

/// Smallest achievable cost over u in [0, 1] (endpoints, since d0 is monotone in u).
inline double min_cost(double theta) { return std::min(cost(theta, 0.0), cost(theta, 1.0)); }

} // namespace two_state
