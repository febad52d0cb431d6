#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qv/distributions.hpp"
#include "qv/payoff.hpp"
#include "qv/roots.hpp"

namespace qv {

/// Solution of the extremist optimization problem:
/// (1 - Psi(w)) |u_lo| = (alpha - w)^2 with the inequality for all other w.
struct ExtremistSolution {
    double alpha = 0.0;
    double w = 0.0;
    double zeta = 0.0;  // filled by extremist_cutoff
    bool exists = false;
};

/// Extremist advantage H(alpha, w) = (1 - Psi(w)) |u_lo| - (alpha - w)^2.
inline double extremist_H(double alpha, double w, const PayoffFunction& P, double u_lo) {
    return (1.0 - P.Psi(w)) * std::abs(u_lo) - (alpha - w) * (alpha - w);
}

/// Sign-change roots of dH/dw = -psi(w)|u_lo| + 2(alpha - w) on (-delta, delta),
/// bisection-refined. The lemma caps the count at two interior roots.
inline std::vector<double> critical_points(double alpha, const PayoffFunction& P,
                                           double u_lo) {
    const double d = P.delta;
    const double au = std::abs(u_lo);
    auto dH = [&](double w) { return -P.psi(w) * au + 2.0 * (alpha - w); };
    const int m = 10000;
    std::vector<double> roots;
    double prev_w = -d, prev_f = dH(prev_w);
    for (int i = 1; i <= m; ++i) {
        const double w = -d + 2.0 * d * i / m;
        const double f = dH(w);
        if (prev_f == 0.0) {
            roots.push_back(prev_w);
        } else if (prev_f * f < 0.0) {
            roots.push_back(bisect(dH, prev_w, w, 1e-10));
        }
        prev_w = w;
        prev_f = f;
    }
    return roots;
}

/// max over w in [-delta, delta] of H(alpha, w); the maximum sits at an
/// interior critical point or at an endpoint.
inline double extremist_h_max(double alpha, const PayoffFunction& P, double u_lo,
                              double* argmax_w = nullptr) {
    const double d = P.delta;
    double best_w = -d;
    double best = extremist_H(alpha, -d, P, u_lo);
    const double at_hi = extremist_H(alpha, d, P, u_lo);
    if (at_hi > best) {
        best = at_hi;
        best_w = d;
    }
    for (double w : critical_points(alpha, P, u_lo)) {
        const double v = extremist_H(alpha, w, P, u_lo);
        if (v > best) {
            best = v;
            best_w = w;
        }
    }
    if (argmax_w) *argmax_w = best_w;
    return best;
}

/// Unique (alpha, w) with h(alpha) = 0 when delta < 1/sqrt(2); h is
/// decreasing in alpha, so plain bisection on [delta, delta + sqrt(2|u_lo|)]
/// applies. h(delta) <= 0 signals the alpha = delta regime (exists = false).
inline ExtremistSolution solve_alpha_w(const PayoffFunction& P, double u_lo) {
    if (u_lo > -1.0)
        throw std::invalid_argument("solve_alpha_w: requires u_lo <= -1");
    ExtremistSolution sol;
    const double d = P.delta;
    auto h = [&](double a) { return extremist_h_max(a, P, u_lo, nullptr); };
    const double h_lo = h(d);
    if (h_lo <= 1e-8) {
        sol.exists = false;
        sol.alpha = d;
        sol.w = d;
        return sol;
    }
    double a_hi = d + std::sqrt(2.0 * std::abs(u_lo));
    if (h(a_hi) > 0.0)
        throw std::runtime_error("solve_alpha_w: h positive on the whole bracket");
    double lo = d, hi = a_hi;
    for (int it = 0; it < 200 && (hi - lo) > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (h(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    sol.alpha = 0.5 * (lo + hi);
    extremist_h_max(sol.alpha, P, u_lo, &sol.w);
    sol.exists = true;
    return sol;
}

struct ExtremistCutoff {
    double zeta = 0.0;
    double u_star = 0.0;
};

/// Cutoff scale zeta and location u_star = u_lo + zeta / N^2.
///
/// The derivation chain gives n^2 mu psi(w) f(u_lo) (u* - u_lo) ~ alpha while
/// the packaged equation reads alpha = zeta psi(w) f(u_lo) with the mu
/// dropped; keep_mu = true follows the derivation (default), false drops it.
inline ExtremistCutoff extremist_cutoff(const ExtremistSolution& sol,
                                        const ValueDistribution& F,
                                        const PayoffFunction& P, long N, double mu,
                                        bool keep_mu = true) {
    if (!sol.exists)
        throw std::invalid_argument("extremist_cutoff: no extremist solution");
    if (N < 2) throw std::invalid_argument("extremist_cutoff: N must be >= 2");
    const double psi_w = P.psi(sol.w);
    const double f_lo = F.density(F.u_lo());
    if (psi_w <= 0.0)
        throw std::runtime_error("extremist_cutoff: psi(w) = 0, degenerate cutoff");
    const double mu_factor = keep_mu ? mu : 1.0;
    if (mu_factor <= 0.0)
        throw std::invalid_argument("extremist_cutoff: mu must be positive");
    ExtremistCutoff out;
    out.zeta = sol.alpha / (mu_factor * psi_w * f_lo);
    out.u_star = F.u_lo() + out.zeta / (static_cast<double>(N) * static_cast<double>(N));
    return out;
}

}  // namespace qv
