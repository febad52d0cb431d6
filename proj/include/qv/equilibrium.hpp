#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qv/distributions.hpp"
#include "qv/extremist.hpp"
#include "qv/fft.hpp"
#include "qv/interp.hpp"
#include "qv/payoff.hpp"
#include "qv/strategy.hpp"
#include "qv/vote_total.hpp"

namespace qv {

struct SolverOptions {
    int grid_size = 801;
    double damping = 0.3;
    double tol_fixed_point = 0.0;  // 0 -> 1e-6 * sqrt(2 u_hi)
    double tol_foc = 1e-6;
    int max_iters = 400;
    int v_scan_points = 2001;
    std::uint64_t seed = 0;
    GridSpec grid;                       // vote-axis grid controls
    std::optional<VoteStrategy> init;    // warm start
};

struct Discontinuity {
    double u_star = 0.0;
    double v_minus = 0.0;
    double v_plus = 0.0;
};

struct EquilibriumReport {
    VoteStrategy strategy;
    double p_hat = 0.0;  // E psi(S_n) at the fixed point
    double foc_residual_sup = 0.0;
    double br_gap_sup = 0.0;
    int iterations = 0;
    bool converged = false;
    double s_mean = 0.0;
    double s_var = 0.0;
    std::optional<Discontinuity> discontinuity;
};

/// Shifted-payoff expectation tables over the vote axis,
/// A(v) = E[Psi(S+v)], B(v) = E[psi(S+v)], C(v) = E[psi'(S+v)],
/// built once per distribution by FFT cross-correlation.
class PayoffShiftTables {
  public:
    PayoffShiftTables(const VoteTotalDistribution& dist, const PayoffFunction& p) {
        const std::size_t g = dist.size();
        h_ = dist.dx;
        v0_ = -0.5 * h_ * static_cast<double>(g);
        std::vector<double> mass(g);
        for (std::size_t i = 0; i < g; ++i) mass[i] = dist.pdf[i] * h_;

        const double base = dist.s0 + v0_;
        std::vector<double> kern(2 * g);
        auto fill = [&](const std::function<double(double)>& f) {
            for (std::size_t i = 0; i < 2 * g; ++i)
                kern[i] = f(base + static_cast<double>(i) * h_);
        };
        fill(p.Psi);
        A_ = correlate_table(mass, kern);
        for (auto& a : A_) a = std::clamp(a, -1.0, 1.0);
        fill(p.psi);
        B_ = correlate_table(mass, kern);
        for (auto& b : B_) b = std::max(b, 0.0);
        fill(p.psi_prime);
        C_ = correlate_table(mass, kern);
    }

    double A(double v) const { return look(A_, v); }
    double B(double v) const { return look(B_, v); }
    double C(double v) const { return look(C_, v); }

    /// Objective G(v) = u * E[Psi(S+v)] - v^2.
    double gain(double u, double v) const { return u * A(v) - v * v; }

  private:
    double look(const std::vector<double>& t, double v) const {
        const double pos = (v - v0_) / h_;
        if (pos <= 0.0) return t.front();
        if (pos >= static_cast<double>(t.size() - 1)) return t.back();
        const std::size_t i = static_cast<std::size_t>(pos);
        const double fr = pos - static_cast<double>(i);
        return t[i] + fr * (t[i + 1] - t[i]);
    }
    double h_ = 0.0, v0_ = 0.0;
    std::vector<double> A_, B_, C_;
};

namespace detail {

// Coarse scan of G over [lo, hi] followed by a safeguarded Newton step on the
// first-order condition u * B(v) = 2v inside the bracketing scan cells.
// Ties at the scan stage break toward smaller |v|.
inline double argmax_gain(const PayoffShiftTables& t, double u, double lo, double hi,
                          int scan_points) {
    if (u == 0.0) return 0.0;
    if (scan_points < 3) scan_points = 3;
    const double step = (hi - lo) / (scan_points - 1);
    double best_v = lo, best_g = t.gain(u, lo);
    for (int i = 1; i < scan_points; ++i) {
        const double v = lo + i * step;
        const double g = t.gain(u, v);
        if (g > best_g + 1e-15 ||
            (std::abs(g - best_g) <= 1e-15 && std::abs(v) < std::abs(best_v))) {
            best_g = g;
            best_v = v;
        }
    }
    double a = std::max(lo, best_v - step);
    double b = std::min(hi, best_v + step);
    auto foc = [&](double v) { return u * t.B(v) - 2.0 * v; };
    const double fa = foc(a), fb = foc(b);
    if (fa > 0.0 && fb < 0.0) {
        // d/dv (u B - 2v) = u C - 2 < 0 near the optimum, so the root is
        // bracketed and bisection is safe; two Newton steps polish it
        double x0 = a, x1 = b;
        for (int it = 0; it < 60 && (x1 - x0) > 1e-15; ++it) {
            const double m = 0.5 * (x0 + x1);
            if (foc(m) > 0.0)
                x0 = m;
            else
                x1 = m;
        }
        double v = 0.5 * (x0 + x1);
        for (int k = 0; k < 2; ++k) {
            const double d = u * t.C(v) - 2.0;
            if (std::abs(d) > 1e-9) {
                const double vn = v - foc(v) / d;
                if (vn >= a && vn <= b) v = vn;
            }
        }
        return v;
    }
    // no interior FOC root in the bracket (boundary or plateau optimum)
    constexpr double invphi = 0.6180339887498948482;
    double ga = a, gb = b;
    double x1 = gb - invphi * (gb - ga), x2 = ga + invphi * (gb - ga);
    double f1 = t.gain(u, x1), f2 = t.gain(u, x2);
    for (int it = 0; it < 200 && (gb - ga) > 1e-14; ++it) {
        if (f1 < f2) {
            ga = x1;
            x1 = x2;
            f1 = f2;
            x2 = ga + invphi * (gb - ga);
            f2 = t.gain(u, x2);
        } else {
            gb = x2;
            x2 = x1;
            f2 = f1;
            x1 = gb - invphi * (gb - ga);
            f1 = t.gain(u, x1);
        }
    }
    return 0.5 * (ga + gb);
}

}  // namespace detail

/// Global best response of an agent with value u against the vote-total law
/// `dist`: argmax over the admissible vote range of u E[Psi(S+v)] - v^2.
inline double best_response(double u, const VoteTotalDistribution& dist,
                            const PayoffFunction& p, double u_lo_support,
                            double u_hi_support, int scan_points = 2001) {
    PayoffShiftTables tables(dist, p);
    const double lo = -std::sqrt(2.0 * std::abs(u_lo_support));
    const double hi = std::sqrt(2.0 * u_hi_support);
    double v = detail::argmax_gain(tables, u, lo, hi, scan_points);
    // enforce the sign contract exactly
    if (u > 0.0 && v < 0.0) v = 0.0;
    if (u < 0.0 && v > 0.0) v = 0.0;
    return v;
}

/// Sup-norm FOC residual r(u) = |2 v(u) - u E[psi(S + v(u))]| over the bulk
/// grid plus the full per-node profile.
struct FocResidual {
    double sup_bulk = 0.0;
    std::vector<double> profile;
};

inline FocResidual foc_residual(const VoteStrategy& strategy, const ValueDistribution& F,
                                const PayoffFunction& P, long N, GridSpec grid = {}) {
    if (N < 2) throw std::invalid_argument("foc_residual: N must be >= 2");
    if (grid.h_max == 0.0) grid.h_max = P.delta / 40.0;
    if (grid.span_min == 0.0)
        grid.span_min = 2.0 * P.delta + strategy.max_abs_vote() +
                        std::sqrt(2.0 * std::max(std::abs(F.u_lo()), F.u_hi()));
    const auto dist = vote_total_distribution(strategy, F, N - 1, grid);
    PayoffShiftTables tables(dist, P);
    FocResidual out;
    out.profile.resize(strategy.grid_u.size());
    const double cell = (strategy.u_hi() - strategy.u_lo()) /
                        static_cast<double>(strategy.grid_u.size() - 1);
    for (std::size_t i = 0; i < strategy.grid_u.size(); ++i) {
        const double u = strategy.grid_u[i];
        const double v = strategy.grid_v[i];
        out.profile[i] = std::abs(2.0 * v - u * tables.B(v));
        const bool near_edge = std::min(u - strategy.u_lo(), strategy.u_hi() - u) <= 2.0 * cell;
        const bool near_jump =
            strategy.cutoff && std::abs(u - strategy.cutoff->u_star) <= cell;
        if (!near_edge && !near_jump) out.sup_bulk = std::max(out.sup_bulk, out.profile[i]);
    }
    return out;
}

/// Residual of the jump necessary condition E[psi'(v~ + S_n)] u* = 2:
/// minimum over v~ in [v_minus, v_plus] of |E[psi'(v~+S)] u* - 2|.
inline double discontinuity_condition_check(const VoteStrategy& strategy,
                                            const ValueDistribution& F,
                                            const PayoffFunction& P, long N,
                                            GridSpec grid = {}) {
    if (!strategy.cutoff)
        throw std::invalid_argument("discontinuity_condition_check: strategy is continuous");
    if (grid.h_max == 0.0) grid.h_max = P.delta / 40.0;
    if (grid.span_min == 0.0)
        grid.span_min = 2.0 * P.delta + strategy.max_abs_vote() +
                        std::sqrt(2.0 * std::max(std::abs(F.u_lo()), F.u_hi()));
    const auto dist = vote_total_distribution(strategy, F, N - 1, grid);
    PayoffShiftTables tables(dist, P);
    const double v_minus = strategy.cutoff->v_extremist;
    const double v_plus = evaluate(strategy, strategy.cutoff->u_star);
    const double u_star = strategy.cutoff->u_star;
    double best = std::numeric_limits<double>::infinity();
    const int m = 4000;
    for (int i = 0; i <= m; ++i) {
        const double v = v_minus + (v_plus - v_minus) * i / m;
        best = std::min(best, std::abs(tables.C(v) * u_star - 2.0));
    }
    return best;
}

namespace detail {

struct InnerResult {
    std::vector<double> v;
    VoteTotalDistribution dist;
    double br_gap = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Extremist vote for a one-out total concentrated at T: the jump target is
// the lower critical point of the advantage function at alpha = T, so the
// vote is w-(T) - T. Falls back to the edge of the psi window when the
// critical branches have coalesced.
inline double extremist_vote_at(double T, const PayoffFunction& P, double u_star) {
    const auto roots = critical_points(T, P, u_star);
    // no response may exceed the sqrt(2 |u|) spending cap
    const double cap = -std::sqrt(2.0 * std::abs(u_star));
    if (!roots.empty()) return std::max(roots.front() - T, cap);
    // branches coalesced: the advantage is decreasing on the window, best
    // deep response parks the total at the lower window edge
    return std::max(-P.delta - T, cap);
}

// Damped best-response iteration over the grid profile, the mu = 0 regime.
// The scalar pivotality map there has slope -1 at the fixed point, which any
// damping factor in (0, 1) stabilizes.
inline InnerResult solve_profile(const ValueDistribution& F, const PayoffFunction& P,
                                 long n, const std::vector<double>& grid_u,
                                 std::vector<double> v,
                                 const std::optional<Cutoff>& cutoff,
                                 const SolverOptions& opts, GridSpec grid, double tol,
                                 int max_iters, double moderate_floor) {
    InnerResult res;
    const double u_lo = grid_u.front(), u_hi = grid_u.back();
    const double v_hi_bound = std::sqrt(2.0 * u_hi);
    const double lam = opts.damping;
    std::vector<double> raw(grid_u.size());
    for (int it = 1; it <= max_iters; ++it) {
        VoteStrategy s{grid_u, v, cutoff};
        res.dist = vote_total_distribution(s, F, n, grid, false);
        PayoffShiftTables tables(res.dist, P);
        for (std::size_t i = 0; i < grid_u.size(); ++i) {
            const double u = grid_u[i];
            const double lo = (cutoff || u >= 0.0) ? std::max(moderate_floor,
                                                              -std::sqrt(2.0 * std::abs(u_lo)))
                                                   : -std::sqrt(2.0 * std::abs(u_lo));
            double b = argmax_gain(tables, u, lo, v_hi_bound, opts.v_scan_points);
            if (u >= 0.0 && b < 0.0) b = 0.0;
            if (u <= 0.0 && b > 0.0) b = 0.0;
            raw[i] = b;
        }
        auto mono = isotonic_projection(raw);
        double gap = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) gap = std::max(gap, std::abs(mono[i] - v[i]));
        res.br_gap = gap;
        res.iterations = it;
        if (gap <= tol) {
            res.converged = true;
            v = std::move(mono);
            break;
        }
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - lam) * v[i] + lam * mono[i];
    }
    res.v = std::move(v);
    return res;
}

struct MuPosResult {
    std::vector<double> v;  // moderate profile
    VoteTotalDistribution dist;
    double T = 0.0;      // moderate vote total n E[v 1{u >= u_star}]
    double v_ext = 0.0;  // extremist branch argmax (atom case)
    double theta = 0.0;  // extremist minus moderate gain for the cutoff type
    double br_gap = 0.0;
    int iterations = 0;
    bool converged = false;
    bool found_root = false;
};

// mu > 0 solve with the extremist atom (optional) frozen at u_star. A plain
// damped iteration diverges here: dT_next/dT exceeds 1 through the psi-window
// tail and, with an atom, through the one-extremist mass. The moderate vote
// total is therefore pinned each pass by a root-find on
// T = kappa * n * mu_mod * E psi(S_n(T)) / 2 (last sign change in T), with
// kappa measuring how far the full best-response profile is from the linear
// consensus approximation. The profile shape then re-converges in a few
// passes.
inline MuPosResult solve_mu_positive(const ValueDistribution& F, const PayoffFunction& P,
                                     long n, const std::vector<double>& grid_u,
                                     std::vector<double> shape, bool with_atom,
                                     double u_star, const SolverOptions& opts,
                                     GridSpec grid, double tol, double* warm_T,
                                     int pass_cap = 8) {
    MuPosResult res;
    const double u_lo = grid_u.front(), u_hi = grid_u.back();
    const double v_lo_bound = -std::sqrt(2.0 * std::abs(u_lo));
    const double v_hi_bound = std::sqrt(2.0 * u_hi);
    const double from = with_atom ? u_star : u_lo;
    const double mu_mod = integrate_adaptive(
        [&](double u) { return u * F.density(u); }, from, u_hi, 1e-12, 1e-11);

    auto shape_total = [&](const std::vector<double>& prof) {
        VoteStrategy s{grid_u, prof, std::nullopt};
        const auto pts = pushforward_points(s, F, from, 0.0);
        KahanSum acc;
        for (const auto& p : pts) acc.add(p.w * p.v);
        return static_cast<double>(n) * acc.value();
    };

    auto dist_at = [&](double T, const std::vector<double>& prof) {
        const double cur = shape_total(prof);
        std::vector<double> scaled(prof.size());
        bool ok = cur > 1e-9 * std::max(1.0, T);
        if (ok) {
            const double scale = T / cur;
            for (std::size_t i = 0; i < prof.size(); ++i) {
                scaled[i] = prof[i] * scale;
                if (scaled[i] < v_lo_bound || scaled[i] > v_hi_bound) ok = false;
            }
        }
        if (!ok) {
            // degenerate shape (best response collapsed or rescale blew past
            // the vote bounds): restart from the linear consensus profile
            const double slope = T / (static_cast<double>(n) * mu_mod);
            for (std::size_t i = 0; i < prof.size(); ++i) scaled[i] = slope * grid_u[i];
        }
        std::optional<Cutoff> cut;
        if (with_atom) cut = Cutoff{u_star, extremist_vote_at(T, P, u_star)};
        VoteStrategy s{grid_u, scaled, cut};
        return std::make_pair(vote_total_distribution(s, F, n, grid, false),
                              std::move(scaled));
    };

    double kappa = 1.0;
    const double T_min = 0.75 * P.delta;
    const double T_max = P.delta + std::sqrt(2.0 * std::abs(u_lo)) + 0.5;
    double T_root = warm_T && *warm_T > 0.0 ? *warm_T : 0.0;

    for (int pass = 0; pass < pass_cap; ++pass) {
        auto residual = [&](double T) {
            auto [d, scaled] = dist_at(T, shape);
            const double epsi = d.expect_shifted(P.psi, 0.0);
            return kappa * static_cast<double>(n) * mu_mod * 0.5 * epsi - T;
        };
        // locate the last + -> - crossing of the consistency residual
        double a = 0.0, b = 0.0;
        bool found = false;
        auto scan = [&](double lo, double hi, int pts) {
            double prev_t = lo, prev_r = residual(lo);
            for (int i = 1; i <= pts; ++i) {
                const double t = lo + (hi - lo) * i / pts;
                const double r = residual(t);
                if (prev_r > 0.0 && r <= 0.0) {
                    a = prev_t;
                    b = t;
                    found = true;
                }
                prev_t = t;
                prev_r = r;
            }
        };
        if (T_root > 0.0) {
            scan(std::max(T_min, 0.8 * T_root), std::min(T_max, 1.25 * T_root), 10);
        }
        if (!found) scan(T_min, T_max, 48);
        if (!found) {
            res.found_root = false;
            return res;  // no self-consistent moderate total: caller decides
        }
        for (int it = 0; it < 40 && (b - a) > 1e-9 * std::max(1.0, b); ++it) {
            const double m = 0.5 * (a + b);
            if (residual(m) > 0.0)
                a = m;
            else
                b = m;
        }
        T_root = 0.5 * (a + b);
        if (warm_T) *warm_T = T_root;

        auto [d, scaled] = dist_at(T_root, shape);
        PayoffShiftTables tables(d, P);
        const double floor =
            with_atom ? 0.5 * (extremist_vote_at(T_root, P, u_star)) : v_lo_bound;
        std::vector<double> raw(grid_u.size());
        for (std::size_t i = 0; i < grid_u.size(); ++i) {
            const double u = grid_u[i];
            double b_i = argmax_gain(tables, u, with_atom ? floor : v_lo_bound,
                                     v_hi_bound, opts.v_scan_points);
            if (u >= 0.0 && b_i < 0.0) b_i = 0.0;
            if (u <= 0.0 && b_i > 0.0) b_i = 0.0;
            raw[i] = b_i;
        }
        auto mono = isotonic_projection(raw);
        double gap = 0.0;
        for (std::size_t i = 0; i < mono.size(); ++i)
            gap = std::max(gap, std::abs(mono[i] - scaled[i]));
        res.br_gap = gap;
        res.iterations += 1;
        const double t_br = shape_total(mono);
        kappa *= (T_root > 1e-300 && t_br > 1e-300) ? t_br / T_root : 1.0;
        shape = std::move(mono);

        if (gap <= tol) {
            res.converged = true;
            res.dist = std::move(d);
            break;
        }
        if (pass + 1 == pass_cap) res.dist = std::move(d);
    }
    res.found_root = true;
    res.T = T_root;
    res.v = shape;
    if (warm_T) *warm_T = T_root;

    // branch gains for the marginal type at the converged distribution
    auto gain = [&](double v) {
        return u_star * res.dist.expect_shifted(P.Psi, v) - v * v;
    };
    if (with_atom) {
        const double split = 0.5 * extremist_vote_at(T_root, P, u_star);
        double ga = v_lo_bound, gb = split;
        constexpr double invphi = 0.6180339887498948482;
        double x1 = gb - invphi * (gb - ga), x2 = ga + invphi * (gb - ga);
        double f1 = gain(x1), f2 = gain(x2);
        for (int it = 0; it < 120 && (gb - ga) > 1e-11; ++it) {
            if (f1 < f2) {
                ga = x1;
                x1 = x2;
                f1 = f2;
                x2 = ga + invphi * (gb - ga);
                f2 = gain(x2);
            } else {
                gb = x2;
                x2 = x1;
                f2 = f1;
                x1 = gb - invphi * (gb - ga);
                f1 = gain(x1);
            }
        }
        res.v_ext = 0.5 * (ga + gb);
        double gm = ga, gM = v_hi_bound;
        double y1 = gM - invphi * (gM - split), y2 = split + invphi * (gM - split);
        double h1 = gain(y1), h2 = gain(y2);
        double lo2 = split, hi2 = gM;
        for (int it = 0; it < 120 && (hi2 - lo2) > 1e-11; ++it) {
            if (h1 < h2) {
                lo2 = y1;
                y1 = y2;
                h1 = h2;
                y2 = lo2 + invphi * (hi2 - lo2);
                h2 = gain(y2);
            } else {
                hi2 = y2;
                y2 = y1;
                h2 = h1;
                y1 = hi2 - invphi * (hi2 - lo2);
                h1 = gain(y1);
            }
        }
        (void)gm;
        const double v_mod = 0.5 * (lo2 + hi2);
        res.theta = gain(res.v_ext) - gain(v_mod);
    }
    return res;
}

}  // namespace detail

/// Symmetric pure-strategy equilibrium by damped global-best-response
/// iteration. With mu > 0 and a solvable extremist problem, a jump in the
/// best response activates the cutoff regime: the moderate profile is solved
/// with the atom frozen, and (u_star, v_extremist) comes from a bisection on
/// the indifference between the extremist and moderate branches.
inline EquilibriumReport solve_equilibrium(const ValueDistribution& F,
                                           const PayoffFunction& P, long N,
                                           SolverOptions opts = {}) {
    if (N < 2) throw std::invalid_argument("solve_equilibrium: N must be >= 2");
    const long n = N - 1;
    const Moments mom = F.moments();
    const double u_lo = F.u_lo(), u_hi = F.u_hi();
    if (opts.tol_fixed_point <= 0.0) opts.tol_fixed_point = 1e-6 * std::sqrt(2.0 * u_hi);
    GridSpec grid = opts.grid;
    if (grid.h_max == 0.0) grid.h_max = P.delta / 40.0;
    if (grid.span_min == 0.0)
        grid.span_min = 2.0 * P.delta + std::sqrt(2.0 * std::max(std::abs(u_lo), u_hi));

    std::vector<double> grid_u(opts.grid_size);
    for (int i = 0; i < opts.grid_size; ++i)
        grid_u[i] = u_lo + (u_hi - u_lo) * i / (opts.grid_size - 1);

    // warm start: Theorem 1 constant for mu = 0, delta/(mu N) slope otherwise
    std::vector<double> v(grid_u.size());
    if (opts.init) {
        for (std::size_t i = 0; i < grid_u.size(); ++i)
            v[i] = evaluate(*opts.init, grid_u[i]);
    } else {
        const double sigma = std::sqrt(mom.sigma2);
        const double slope =
            (std::abs(mom.mu) < 1e-9)
                ? 1.0 / (std::pow(2.0, 0.75) * std::sqrt(sigma) *
                         std::pow(M_PI * static_cast<double>(n), 0.25))
                : P.delta / (mom.mu * static_cast<double>(N));
        for (std::size_t i = 0; i < grid_u.size(); ++i) v[i] = slope * grid_u[i];
    }

    const double jump_threshold = 0.25 * std::sqrt(2.0 * std::abs(u_lo));
    EquilibriumReport rep;

    ExtremistSolution ext;
    bool extremist_regime = false;
    if (mom.mu > 1e-9) {
        ext = solve_alpha_w(P, u_lo);
        extremist_regime = ext.exists;
    }

    if (mom.mu <= 1e-9) {
        auto inner = detail::solve_profile(F, P, n, grid_u, v, std::nullopt, opts, grid,
                                           opts.tol_fixed_point, opts.max_iters,
                                           -std::sqrt(2.0 * std::abs(u_lo)));
        rep.strategy = VoteStrategy{grid_u, inner.v, std::nullopt};
        rep.br_gap_sup = inner.br_gap;
        rep.iterations = inner.iterations;
        rep.converged = inner.converged;
        rep.p_hat = inner.dist.expect_shifted(P.psi, 0.0);
        rep.s_mean = inner.dist.mean;
        rep.s_var = inner.dist.var;
        // a persistent jump in a regime the theory says is continuous means
        // the iteration went somewhere it should not have
        for (std::size_t i = 0; i + 1 < inner.v.size(); ++i)
            if (inner.v[i + 1] - inner.v[i] >= jump_threshold) rep.converged = false;
        const auto foc = foc_residual(rep.strategy, F, P, N, grid);
        rep.foc_residual_sup = foc.sup_bulk;
        rep.converged = rep.converged && foc.sup_bulk <= opts.tol_foc;
        return rep;
    }

    auto finish_continuous = [&](detail::MuPosResult&& r) {
        rep.strategy = VoteStrategy{grid_u, r.v, std::nullopt};
        rep.br_gap_sup = r.br_gap;
        rep.iterations += r.iterations;
        rep.converged = r.converged;
        rep.p_hat = r.dist.expect_shifted(P.psi, 0.0);
        rep.s_mean = r.dist.mean;
        rep.s_var = r.dist.var;
        const auto foc = foc_residual(rep.strategy, F, P, N, grid);
        rep.foc_residual_sup = foc.sup_bulk;
        return rep;
    };

    if (!extremist_regime) {
        double warm_T = 0.0;
        auto r = detail::solve_mu_positive(F, P, n, grid_u, v, false, u_lo, opts, grid,
                                           opts.tol_fixed_point, &warm_T);
        if (!r.found_root)
            throw std::runtime_error("solve_equilibrium: no self-consistent vote total");
        return finish_continuous(std::move(r));
    }

    // Theorem-3 regime: bisection on the cutoff u_star for indifference
    // between the extremist and moderate branches of the marginal type. theta
    // is decreasing in u_star: more extremist mass raises the vote total and
    // shrinks |u_star|, both eroding the extremist advantage.
    const double zeta_guess =
        ext.alpha / std::max(mom.mu * P.psi(ext.w) * F.density(u_lo), 1e-12);
    const double off_guess = zeta_guess / (static_cast<double>(N) * static_cast<double>(N));
    double warm_T = 0.0;
    std::vector<double> shape = v;
    int total_iters = 0;

    auto theta_at = [&](double off, detail::MuPosResult& out, int pass_cap = 3) {
        out = detail::solve_mu_positive(F, P, n, grid_u, shape, true, u_lo + off, opts,
                                        grid, opts.tol_fixed_point, &warm_T, pass_cap);
        total_iters += out.iterations;
        if (!out.found_root) return -1.0;  // total ran away: extremism dead
        shape = out.v;
        return out.theta;
    };

    detail::MuPosResult probe;
    double lo_off = 1e-3 * off_guess;
    double theta_lo = theta_at(lo_off, probe);
    if (theta_lo <= 0.0) {
        // no profitable extremist deviation at this N: continuous regime
        double wt = 0.0;
        auto r = detail::solve_mu_positive(F, P, n, grid_u, shape, false, u_lo, opts,
                                           grid, opts.tol_fixed_point, &wt);
        if (!r.found_root)
            throw std::runtime_error("solve_equilibrium: no self-consistent vote total");
        rep.iterations = total_iters;
        return finish_continuous(std::move(r));
    }
    double hi_off = lo_off;
    double theta_hi = theta_lo;
    for (int k = 0; k < 60; ++k) {
        hi_off *= 2.0;
        if (u_lo + hi_off > 0.5 * u_lo) break;
        theta_hi = theta_at(hi_off, probe);
        if (theta_hi < 0.0) break;
    }
    if (theta_hi >= 0.0)
        throw std::runtime_error("solve_equilibrium: failed to bracket the extremist cutoff");

    double a = lo_off, b = hi_off;
    for (int it = 0; it < 40 && (b - a) > 0.01 * a; ++it) {
        const double m = std::sqrt(a * b);  // offsets span decades
        if (theta_at(m, probe) > 0.0)
            a = m;
        else
            b = m;
    }
    const double u_star = u_lo + std::sqrt(a * b);
    detail::MuPosResult fin;
    (void)theta_at(u_star - u_lo, fin, 10);
    if (!fin.found_root)
        throw std::runtime_error("solve_equilibrium: extremist solve lost its root");

    const Cutoff cut{u_star, fin.v_ext};
    rep.strategy = VoteStrategy{grid_u, fin.v, cut};
    rep.br_gap_sup = fin.br_gap;
    rep.iterations = total_iters;
    rep.converged = fin.converged;
    rep.p_hat = fin.dist.expect_shifted(P.psi, 0.0);
    rep.s_mean = fin.dist.mean;
    rep.s_var = fin.dist.var;
    rep.discontinuity =
        Discontinuity{u_star, cut.v_extremist, evaluate(rep.strategy, u_star)};
    const auto foc = foc_residual(rep.strategy, F, P, N, grid);
    rep.foc_residual_sup = foc.sup_bulk;
    return rep;
}

}  // namespace qv
