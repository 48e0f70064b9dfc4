#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cmdplab/analysis.hpp"
#include "cmdplab/cmdp.hpp"
#include "cmdplab/error.hpp"
#include "cmdplab/harness.hpp"

namespace cmdplab {

// ---------------------------------------------------------------------------
// Cmdp files
//
//   {"S": 2, "A": 2, "M": 1,
//    "p":    [[[p(0,0,0), p(0,0,1)], ...], ...],    S x A x S
//    "r":    [[r(0,0), r(0,1)], ...],               S x A
//    "c":    [[[c_1(0,0), ...], ...]],              M x S x A
//    "c_ub": [...]}                                 M
// ---------------------------------------------------------------------------

inline nlohmann::json cmdp_to_json(const Cmdp& m) {
    using nlohmann::json;
    auto table = [&](const Table& t) {
        json rows = json::array();
        for (Eigen::Index s = 0; s < t.rows(); ++s) {
            json row = json::array();
            for (Eigen::Index a = 0; a < t.cols(); ++a) row.push_back(t(s, a));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    json p = json::array();
    for (std::size_t s = 0; s < m.S(); ++s) {
        json per_action = json::array();
        for (std::size_t a = 0; a < m.A(); ++a) {
            auto row = m.p.row(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
        }
        p.push_back(std::move(per_action));
    }
    json c = json::array();
    for (const Table& ci : m.c) c.push_back(table(ci));
    return {{"S", m.S()}, {"A", m.A()}, {"M", m.M()}, {"p", p}, {"r", table(m.r)}, {"c", c}, {"c_ub", m.c_ub}};
}

/// Throws ModelError on schema or shape problems and on invalid models.
inline Cmdp cmdp_from_json(const nlohmann::json& j) {
    try {
        const auto S = j.at("S").get<std::size_t>();
        const auto A = j.at("A").get<std::size_t>();
        const auto M = j.at("M").get<std::size_t>();
        auto table = [&](const nlohmann::json& rows, const char* what) {
            if (!rows.is_array() || rows.size() != S) throw ModelError(std::string(what) + " must have S rows");
            Table t(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
            for (std::size_t s = 0; s < S; ++s) {
                if (!rows[s].is_array() || rows[s].size() != A)
                    throw ModelError(std::string(what) + " rows must have A entries");
                for (std::size_t a = 0; a < A; ++a)
                    t(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = rows[s][a].get<double>();
            }
            return t;
        };
        Cmdp m;
        m.p = TransitionTensor(S, A);
        const auto& p = j.at("p");
        if (!p.is_array() || p.size() != S) throw ModelError("p must be S x A x S");
        for (std::size_t s = 0; s < S; ++s) {
            if (!p[s].is_array() || p[s].size() != A) throw ModelError("p must be S x A x S");
            for (std::size_t a = 0; a < A; ++a) {
                if (!p[s][a].is_array() || p[s][a].size() != S) throw ModelError("p must be S x A x S");
                for (std::size_t x = 0; x < S; ++x) m.p(s, a, x) = p[s][a][x].get<double>();
            }
        }
        m.r = table(j.at("r"), "r");
        const auto& c = j.at("c");
        if (!c.is_array() || c.size() != M) throw ModelError("c must hold M tables");
        for (std::size_t i = 0; i < M; ++i) m.c.push_back(table(c[i], "c"));
        m.c_ub = j.at("c_ub").get<std::vector<double>>();
        if (m.c_ub.size() != M) throw ModelError("c_ub must have M entries");
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("bad CMDP file: ") + e.what());
    }
}

inline Cmdp load_cmdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open CMDP file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("CMDP file '" + path + "' is not valid JSON: " + e.what());
    }
    return cmdp_from_json(j);
}

inline void save_cmdp(const Cmdp& m, const std::string& path) {
    std::ofstream out(path);
    out << cmdp_to_json(m).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Per-run CSV: one row per checkpoint.
//   t,reward_regret,cost_regret_1,...,cost_regret_M,episode_index
// Reals are printed with 17 significant digits.
// ---------------------------------------------------------------------------

inline std::string format_real(double v) {
    if (std::isnan(v)) return "";
    return fmt::format("{:.17g}", v);
}

inline void write_run_csv(std::ostream& out, const RunResult& res) {
    const std::size_t M = res.trace.c_ub.size();
    out << "t,reward_regret";
    for (std::size_t i = 1; i <= M; ++i) out << ",cost_regret_" << i;
    out << ",episode_index\n";
    for (const Checkpoint& cp : res.trace.checkpoints) {
        out << cp.t << ',' << format_real(cp.reward_regret);
        for (double v : cp.cost_regret) out << ',' << format_real(v);
        out << ',' << cp.episode << '\n';
    }
}

// ---------------------------------------------------------------------------
// Seed aggregate
// ---------------------------------------------------------------------------

/// Linearly interpolated sample quantile (the usual "type 7" definition).
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Spread {
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

inline Spread spread_of(const std::vector<double>& v) { return {quantile(v, 0.5), quantile(v, 0.25), quantile(v, 0.75)}; }

struct SummaryRow {
    std::uint64_t t = 0;
    Spread reward_regret;
    std::vector<Spread> cost_regret;
    Spread episodes;
    /// Theorem bounds evaluated at horizon t; absent for t < 2.
    std::optional<BoundReport> bounds;
};

/// Inputs for the theorem-bound overlay besides the horizon.
struct OverlayInputs {
    double delta = 0.05;
    double eta = 1.0;
    double eta_hat = 0.0;
    std::vector<double> b;
    double diameter = 0.0;
    double scale = 1.0;
};

inline OverlayInputs overlay_inputs(const Cmdp& m, double delta, const std::vector<double>& b) {
    OverlayInputs in;
    in.delta = delta;
    in.b = b;
    in.scale = magnitude_scale(m);
    const double slack = max_min_slack(m).slack;
    in.eta = std::isinf(slack) ? 1.0 : slack;
    in.eta_hat = m.r.maxCoeff() - m.r.minCoeff();
    try {
        in.diameter = compute_diameter(m);
    } catch (const NotCommunicating&) {
        in.diameter = std::numeric_limits<double>::infinity();
    }
    return in;
}

/// Requires every run to share one checkpoint schedule.
inline std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs, const Cmdp& m, const OverlayInputs& ov) {
    std::vector<SummaryRow> rows;
    if (runs.empty()) return rows;
    const auto& ref = runs.front().trace.checkpoints;
    for (const auto& r : runs)
        if (r.trace.checkpoints.size() != ref.size()) throw InvalidInputs("runs have different checkpoint schedules");
    const std::size_t M = m.M();
    for (std::size_t k = 0; k < ref.size(); ++k) {
        SummaryRow row;
        row.t = ref[k].t;
        std::vector<double> rr, ep;
        std::vector<std::vector<double>> cr(M);
        for (const auto& r : runs) {
            const Checkpoint& cp = r.trace.checkpoints[k];
            if (cp.t != row.t) throw InvalidInputs("runs have different checkpoint schedules");
            rr.push_back(cp.reward_regret);
            ep.push_back(static_cast<double>(cp.episode));
            for (std::size_t i = 0; i < M; ++i) cr[i].push_back(cp.cost_regret[i]);
        }
        row.reward_regret = spread_of(rr);
        row.episodes = spread_of(ep);
        for (auto& v : cr) row.cost_regret.push_back(spread_of(v));
        if (row.t >= 2) {
            BoundInputs in;
            in.T = row.t;
            in.S = m.S();
            in.A = m.A();
            in.M = M;
            in.delta = ov.delta;
            in.eta = ov.eta;
            in.eta_hat = ov.eta_hat;
            in.b = ov.b;
            in.diameter = ov.diameter;
            in.scale = ov.scale;
            row.bounds = theorem_bounds(in);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/**
 * Summary CSV columns, in order:
 *   t,
 *   reward_regret_median, reward_regret_q25, reward_regret_q75,
 *   cost_regret_<i>_median, cost_regret_<i>_q25, cost_regret_<i>_q75   (i = 1..M),
 *   episodes_median,
 *   theorem1_bound, theorem2_reward_bound, theorem2_cost_bound_<i> (i = 1..M),
 *   theorem3_floor, theorem3_floor_with_T
 * Bound columns are empty at t = 1.
 */
inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows, std::size_t M) {
    out << "t,reward_regret_median,reward_regret_q25,reward_regret_q75";
    for (std::size_t i = 1; i <= M; ++i)
        out << ",cost_regret_" << i << "_median,cost_regret_" << i << "_q25,cost_regret_" << i << "_q75";
    out << ",episodes_median,theorem1_bound,theorem2_reward_bound";
    for (std::size_t i = 1; i <= M; ++i) out << ",theorem2_cost_bound_" << i;
    out << ",theorem3_floor,theorem3_floor_with_T\n";
    for (const auto& row : rows) {
        out << row.t << ',' << format_real(row.reward_regret.median) << ',' << format_real(row.reward_regret.q25)
            << ',' << format_real(row.reward_regret.q75);
        for (const auto& c : row.cost_regret)
            out << ',' << format_real(c.median) << ',' << format_real(c.q25) << ',' << format_real(c.q75);
        out << ',' << format_real(row.episodes.median);
        if (row.bounds) {
            out << ',' << format_real(row.bounds->theorem1_bound) << ',' << format_real(row.bounds->theorem2_reward_bound);
            for (double v : row.bounds->theorem2_cost_bounds) out << ',' << format_real(v);
            out << ',' << format_real(row.bounds->theorem3_floor) << ',' << format_real(row.bounds->theorem3_floor_with_T);
        } else {
            out << ",,,,";
            for (std::size_t i = 0; i < M; ++i) out << ',';
        }
        out << '\n';
    }
}

/// Machine-readable summary. Wall-clock times are left out so that output
/// files depend only on the configuration and seeds.
inline nlohmann::json summary_json(const std::vector<RunResult>& runs, const std::vector<SummaryRow>& rows,
                                   double r_star, const std::vector<double>& c_ub) {
    using nlohmann::json;
    auto spread = [](const Spread& s) { return json{{"median", s.median}, {"q25", s.q25}, {"q75", s.q75}}; };
    json j;
    j["learner"] = runs.empty() ? "" : runs.front().learner;
    j["r_star"] = r_star;
    j["c_ub"] = c_ub;
    json cps = json::array();
    for (const auto& row : rows) {
        json cp{{"t", row.t}, {"reward_regret", spread(row.reward_regret)}, {"episodes", spread(row.episodes)}};
        json costs = json::array();
        for (const auto& c : row.cost_regret) costs.push_back(spread(c));
        cp["cost_regret"] = costs;
        if (row.bounds) {
            cp["theorem1_bound"] = row.bounds->theorem1_bound;
            cp["theorem2_reward_bound"] = row.bounds->theorem2_reward_bound;
            cp["theorem2_cost_bounds"] = row.bounds->theorem2_cost_bounds;
            cp["theorem3_floor"] = row.bounds->theorem3_floor;
            cp["theorem3_floor_with_T"] = row.bounds->theorem3_floor_with_T;
        }
        cps.push_back(std::move(cp));
    }
    j["checkpoints"] = cps;
    json rs = json::array();
    for (const auto& r : runs) {
        json eps = json::array();
        for (const auto& e : r.episodes) eps.push_back({{"k", e.k}, {"tau", e.tau}, {"feasible", e.feasible}});
        rs.push_back({{"seed", r.seed},
                      {"transitions", r.transitions},
                      {"final_reward_regret", r.final_reward_regret()},
                      {"final_cost_regret", r.final_cost_regret()},
                      {"trajectory_hash", fmt::format("{:016x}", r.trajectory_hash)},
                      {"episodes", eps}});
    }
    j["runs"] = rs;
    return j;
}

} // namespace cmdplab
