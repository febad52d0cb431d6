#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qv/distributions.hpp"
#include "qv/equilibrium.hpp"
#include "qv/extremist.hpp"
#include "qv/simulation.hpp"
#include "qv/stats.hpp"
#include "qv/strategy.hpp"
#include "qv/vote_total.hpp"

namespace qv {

/// Proportionality constant of Theorem 1 as printed in Eq. (4):
/// p_N = 1 / (2^(3/4) sqrt(sigma) (pi (N-1))^(1/4)).
inline double p_n_theory(double sigma, long N) {
    return 1.0 / (std::pow(2.0, 0.75) * std::sqrt(sigma) *
                  std::pow(M_PI * static_cast<double>(N - 1), 0.25));
}

/// Constant the proof of Theorem 1 actually pins down. Its closing display
/// sqrt(pi n / 2) sigma (E psi)^2 = 2 gives E psi / 2 =
/// 1 / (sqrt(sigma) (2 pi (N-1))^(1/4)), a factor sqrt(2) above the packaged
/// Eq. (4) value; the solved fixed point lands on this one.
inline double p_n_selfconsistent(double sigma, long N) {
    return 1.0 / std::sqrt(sigma * std::sqrt(2.0 * M_PI * static_cast<double>(N - 1)));
}

struct ProportionalityCheck {
    double max_rel_dev_bulk = 0.0;      // vs the self-consistent constant
    double max_rel_dev_bulk_eq4 = 0.0;  // vs the Eq. (4) constant
    double p_n = 0.0;                   // Eq. (4) value (reported)
    double p_n_consistent = 0.0;
    double p_hat_ratio = 0.0;  // (E psi / 2) / p_n
};

/// Bulk deviation of v(u) from proportionality, mu = 0 case. Bulk is the
/// middle band |u| in [0.1, 0.9] * max(|u_lo|, u_hi).
inline ProportionalityCheck check_proportionality(const EquilibriumReport& report,
                                                  const ValueDistribution& F, long N) {
    const Moments mom = F.moments();
    if (std::abs(mom.mu) > 1e-9)
        throw std::invalid_argument("check_proportionality: requires mu = 0");
    const double sigma = std::sqrt(mom.sigma2);
    ProportionalityCheck out;
    out.p_n = p_n_theory(sigma, N);
    out.p_n_consistent = p_n_selfconsistent(sigma, N);
    out.p_hat_ratio = 0.5 * report.p_hat / out.p_n;
    const double umax = std::max(std::abs(F.u_lo()), F.u_hi());
    const auto& s = report.strategy;
    for (std::size_t i = 0; i < s.grid_u.size(); ++i) {
        const double u = s.grid_u[i];
        const double au = std::abs(u);
        if (au < 0.1 * umax || au > 0.9 * umax) continue;
        out.max_rel_dev_bulk = std::max(
            out.max_rel_dev_bulk, std::abs(s.grid_v[i] / (out.p_n_consistent * u) - 1.0));
        out.max_rel_dev_bulk_eq4 =
            std::max(out.max_rel_dev_bulk_eq4, std::abs(s.grid_v[i] / (out.p_n * u) - 1.0));
    }
    return out;
}

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> conjecture_ratio;  // EI * 16 sigma^6 N / mu3^2 per kept N
    std::vector<long> kept_n;
    std::vector<long> dropped_n;  // EI consistent with zero, flagged
};

/// Least-squares log EI vs log N plus the ratio against the conjectured
/// mu3^2 / (16 sigma^6 N) decay.
inline DecayFit ei_decay_fit(const std::vector<SweepRow>& rows, const Moments& mom) {
    std::vector<double> lx, ly;
    DecayFit fit;
    for (const auto& r : rows) {
        if (r.estimate.ei <= 3.0 * r.estimate.std_err || r.estimate.ei <= 0.0) {
            fit.dropped_n.push_back(r.N);
            continue;
        }
        lx.push_back(std::log(static_cast<double>(r.N)));
        ly.push_back(std::log(r.estimate.ei));
        fit.kept_n.push_back(r.N);
        if (std::abs(mom.mu3_raw) > 0.0) {
            fit.conjecture_ratio.push_back(r.estimate.ei * 16.0 *
                                           std::pow(mom.sigma2, 3.0) *
                                           static_cast<double>(r.N) /
                                           (mom.mu3_raw * mom.mu3_raw));
        }
    }
    if (lx.size() < 4)
        throw std::runtime_error("ei_decay_fit: fewer than 4 usable N values");
    if (lx.back() - lx.front() < 1.5 * std::log(10.0))
        throw std::runtime_error("ei_decay_fit: N range spans less than 1.5 decades");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / m;
    return fit;
}

struct ConcentrationCheck {
    double outside_mass = 0.0;
    double outside_mass_no_extremist = 0.0;  // conditional on M = 0
    double extremist_prob = 0.0;             // 1 - P(M = 0)
};

/// Mass of the vote total V_N outside [alpha - eps, alpha + eps], from the
/// N-voter convolution (mu > 0, Theorem 2).
inline ConcentrationCheck concentration_check(const EquilibriumReport& report,
                                              const ExtremistSolution& sol,
                                              const ValueDistribution& F,
                                              const PayoffFunction& P, long N,
                                              double eps) {
    if (!(F.moments().mu > 0.0))
        throw std::invalid_argument("concentration_check: requires mu > 0");
    if (!sol.exists && report.discontinuity)
        throw std::invalid_argument(
            "concentration_check: report has a jump but no extremist solution exists");
    const double alpha = sol.exists ? sol.alpha : P.delta;

    GridSpec grid;
    grid.h_max = P.delta / 24.0;
    grid.span_min = 2.0 * P.delta + report.strategy.max_abs_vote() + std::abs(alpha) + eps;
    const auto dist = vote_total_distribution(report.strategy, F, N, grid);

    ConcentrationCheck out;
    const double lo = alpha - eps, hi = alpha + eps;
    KahanSum inside;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double x = dist.coord(i);
        if (x >= lo && x <= hi) {
            double w = dist.pdf[i];
            if (i == 0 || i + 1 == dist.size()) w *= 0.5;
            inside.add(w);
        }
    }
    const double inside_mass = inside.value() * dist.dx;
    out.outside_mass = std::max(1.0 - inside_mass, 0.0);

    if (dist.has_atom) {
        const double p0 = std::pow(1.0 - dist.atom_q, static_cast<double>(N));
        out.extremist_prob = 1.0 - p0;
        // rebuild without the atom branch: conditional law given M = 0
        VoteStrategy cont = report.strategy;
        cont.cutoff.reset();
        const auto dist0 = vote_total_distribution(cont, F, N, grid);
        KahanSum inside0;
        for (std::size_t i = 0; i < dist0.size(); ++i) {
            const double x = dist0.coord(i);
            if (x >= lo && x <= hi) {
                double w = dist0.pdf[i];
                if (i == 0 || i + 1 == dist0.size()) w *= 0.5;
                inside0.add(w);
            }
        }
        out.outside_mass_no_extremist = std::max(1.0 - inside0.value() * dist0.dx, 0.0);
    } else {
        out.outside_mass_no_extremist = out.outside_mass;
    }
    return out;
}

/// Kolmogorov-Smirnov distance between the standardized S_n law and the
/// standard normal CDF (mu = 0 case, continuous strategy).
inline double normality_check(const VoteTotalDistribution& dist) {
    const double m = dist.grid_mean();
    const double sd = std::sqrt(dist.grid_var());
    if (!(sd > 0.0)) throw std::runtime_error("normality_check: degenerate distribution");
    double ks = 0.0;
    KahanSum cum;
    const double total = dist.trapezoid_mass();
    for (std::size_t i = 0; i + 1 < dist.size(); ++i) {
        cum.add(0.5 * (dist.pdf[i] + dist.pdf[i + 1]) * dist.dx);
        const double cdf = cum.value() / total;
        const double z = (dist.coord(i + 1) - m) / sd;
        ks = std::max(ks, std::abs(cdf - normal_cdf(z)));
    }
    return ks;
}

inline double normality_check(const EquilibriumReport& report, const ValueDistribution& F,
                              const PayoffFunction& P, long N) {
    if (report.strategy.cutoff)
        throw std::invalid_argument("normality_check: requires a continuous strategy");
    GridSpec grid;
    grid.h_max = P.delta / 24.0;
    const auto dist = vote_total_distribution(report.strategy, F, N - 1, grid);
    return normality_check(dist);
}

/// |E S_n| / sd(S_n) for the mu = 0 trend report (Theorem 1, Eq. (5)).
inline double mean_vs_sd_check(const EquilibriumReport& report, const ValueDistribution& F,
                               const PayoffFunction& P, long N) {
    GridSpec grid;
    grid.h_max = P.delta / 24.0;
    const auto dist = vote_total_distribution(report.strategy, F, N - 1, grid);
    return std::abs(dist.mean) / std::sqrt(dist.var);
}

}  // namespace qv
