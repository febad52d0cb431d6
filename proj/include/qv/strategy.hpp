#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qv {

/// Extremist branch of a Theorem-3 style strategy: below u_star the agent
/// buys v_extremist votes regardless of the grid profile.
struct Cutoff {
    double u_star = 0.0;
    double v_extremist = 0.0;
};

/// Grid representation of a vote function u -> v(u), piecewise linear
/// between nodes, with an optional extremist discontinuity.
struct VoteStrategy {
    std::vector<double> grid_u;
    std::vector<double> grid_v;
    std::optional<Cutoff> cutoff;

    double u_lo() const { return grid_u.front(); }
    double u_hi() const { return grid_u.back(); }

    double max_abs_vote() const {
        double m = 0.0;
        for (double v : grid_v) m = std::max(m, std::abs(v));
        if (cutoff) m = std::max(m, std::abs(cutoff->v_extremist));
        return m;
    }
};

inline double evaluate(const VoteStrategy& s, double u) {
    if (u < s.u_lo() - 1e-12 || u > s.u_hi() + 1e-12)
        throw std::invalid_argument("evaluate: u outside the value support");
    if (s.cutoff && u < s.cutoff->u_star) return s.cutoff->v_extremist;
    u = std::clamp(u, s.u_lo(), s.u_hi());
    const auto it = std::upper_bound(s.grid_u.begin(), s.grid_u.end(), u);
    std::size_t i = static_cast<std::size_t>(it - s.grid_u.begin());
    if (i == 0) return s.grid_v.front();
    if (i >= s.grid_u.size()) return s.grid_v.back();
    --i;
    const double t = (u - s.grid_u[i]) / (s.grid_u[i + 1] - s.grid_u[i]);
    return s.grid_v[i] + t * (s.grid_v[i + 1] - s.grid_v[i]);
}

/// Structural invariants: monotone profile, sign agreement v(u)*u >= 0,
/// votes within [-sqrt(2|u_lo|), sqrt(2 u_hi)], extremist vote below the
/// moderate branch. Throws on violation.
inline void validate(const VoteStrategy& s, double tol = 1e-9) {
    if (s.grid_u.size() < 2 || s.grid_u.size() != s.grid_v.size())
        throw std::invalid_argument("strategy: bad grid sizes");
    for (std::size_t i = 0; i + 1 < s.grid_u.size(); ++i) {
        if (!(s.grid_u[i] < s.grid_u[i + 1]))
            throw std::invalid_argument("strategy: grid_u not increasing");
        if (s.grid_v[i] > s.grid_v[i + 1] + tol)
            throw std::invalid_argument("strategy: grid_v not monotone");
    }
    const double vmin = -std::sqrt(2.0 * std::abs(s.u_lo()));
    const double vmax = std::sqrt(2.0 * s.u_hi());
    for (std::size_t i = 0; i < s.grid_u.size(); ++i) {
        if (s.grid_v[i] * s.grid_u[i] < -tol)
            throw std::invalid_argument("strategy: sign agreement violated");
        if (s.grid_v[i] < vmin - tol || s.grid_v[i] > vmax + tol)
            throw std::invalid_argument("strategy: vote outside admissible bounds");
    }
    if (s.cutoff) {
        const Cutoff& c = *s.cutoff;
        if (c.u_star < s.u_lo() || c.u_star > s.u_hi())
            throw std::invalid_argument("strategy: cutoff outside support");
        if (c.u_star > 0.0)
            throw std::invalid_argument(
                "strategy: extremist cutoff must sit in the negative tail");
        if (c.v_extremist < vmin - tol || c.v_extremist > 0.0 + tol)
            throw std::invalid_argument("strategy: extremist vote out of range");
        for (std::size_t i = 0; i < s.grid_u.size(); ++i) {
            if (s.grid_u[i] >= c.u_star && c.v_extremist > s.grid_v[i] + tol)
                throw std::invalid_argument("strategy: extremist vote above moderate branch");
        }
    }
}

/// Proportional strategy v(u) = slope * u on a uniform grid.
inline VoteStrategy make_linear_strategy(double u_lo, double u_hi, double slope,
                                         int grid_size = 801) {
    VoteStrategy s;
    s.grid_u.resize(grid_size);
    s.grid_v.resize(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        s.grid_u[i] = u_lo + (u_hi - u_lo) * i / (grid_size - 1);
        s.grid_v[i] = slope * s.grid_u[i];
    }
    return s;
}

// CSV serialization: optional cutoff header comment, then "u,v" rows.
inline void write_strategy_csv(std::ostream& os, const VoteStrategy& s) {
    os.precision(17);
    if (s.cutoff) {
        std::ostringstream line;
        line.precision(17);
        line << "# cutoff,u_star=" << s.cutoff->u_star
             << ",v_extremist=" << s.cutoff->v_extremist;
        os << line.str() << "\n";
    }
    os << "u,v\n";
    for (std::size_t i = 0; i < s.grid_u.size(); ++i)
        os << s.grid_u[i] << "," << s.grid_v[i] << "\n";
}

inline VoteStrategy read_strategy_csv(std::istream& is) {
    VoteStrategy s;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto upos = line.find("u_star=");
            const auto vpos = line.find("v_extremist=");
            if (upos != std::string::npos && vpos != std::string::npos) {
                Cutoff c;
                c.u_star = std::stod(line.substr(upos + 7));
                c.v_extremist = std::stod(line.substr(vpos + 12));
                s.cutoff = c;
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true;  // "u,v"
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("strategy csv: bad row");
        s.grid_u.push_back(std::stod(line.substr(0, comma)));
        s.grid_v.push_back(std::stod(line.substr(comma + 1)));
    }
    if (s.grid_u.size() < 2) throw std::runtime_error("strategy csv: too few rows");
    return s;
}

}  // namespace qv
