#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qv/distributions.hpp"
#include "qv/fft.hpp"
#include "qv/payoff.hpp"
#include "qv/quadrature.hpp"
#include "qv/strategy.hpp"

namespace qv {

/// Grid controls for the vote-total convolution.
struct GridSpec {
    int size_log2 = 16;     // number of cells = 2^size_log2
    double h_max = 0.0;     // optional cap on the cell width (0 = none)
    double span_min = 0.0;  // absolute coordinate that must be covered (0 = none)
    double sd_mult = 45.0;  // covered half-width in units of sd(S_n)
    int max_widen = 6;
};

/// Discretized law of S_n = sum of n i.i.d. votes v(U_i).
struct VoteTotalDistribution {
    double s0 = 0.0;  // coordinate of pdf[0]
    double dx = 0.0;
    std::vector<double> pdf;  // density values on the uniform grid
    long n = 0;
    double mean = 0.0;  // exact n * E[v(U)]
    double var = 0.0;   // exact n * Var[v(U)]

    // atom bookkeeping (Theorem-3 mixture)
    bool has_atom = false;
    double atom_q = 0.0;
    double atom_v = 0.0;
    double mixture_mass = 1.0;  // sum of the binomial weights kept (M <= 2)
    double tail_bound = 0.0;    // P(M >= 3), the discarded remainder

    std::size_t size() const { return pdf.size(); }
    double coord(std::size_t i) const { return s0 + static_cast<double>(i) * dx; }
    std::vector<double> grid_s() const {
        std::vector<double> g(pdf.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = coord(i);
        return g;
    }

    double trapezoid_mass() const {
        double s = 0.0;
        for (double v : pdf) s += v;
        s -= 0.5 * (pdf.front() + pdf.back());
        return s * dx;
    }

    /// E[g(S + shift)] against the stored density.
    template <class G>
    double expect_shifted(const G& g, double shift) const {
        KahanSum acc;
        for (std::size_t i = 0; i < pdf.size(); ++i) {
            if (pdf[i] == 0.0) continue;
            double w = pdf[i];
            if (i == 0 || i + 1 == pdf.size()) w *= 0.5;
            acc.add(w * g(coord(i) + shift));
        }
        return acc.value() * dx;
    }

    double grid_mean() const {
        KahanSum acc;
        for (std::size_t i = 0; i < pdf.size(); ++i) {
            double w = pdf[i];
            if (i == 0 || i + 1 == pdf.size()) w *= 0.5;
            acc.add(w * coord(i));
        }
        return acc.value() * dx / trapezoid_mass();
    }

    double grid_var() const {
        const double m = grid_mean();
        KahanSum acc;
        for (std::size_t i = 0; i < pdf.size(); ++i) {
            double w = pdf[i];
            if (i == 0 || i + 1 == pdf.size()) w *= 0.5;
            const double d = coord(i) - m;
            acc.add(w * d * d);
        }
        return acc.value() * dx / trapezoid_mass();
    }
};

struct PayoffTerms {
    double EPsi = 0.0;
    double Epsi = 0.0;
    double Epsi_prime = 0.0;
};

/// (E[Psi(S+v)], E[psi(S+v)], E[psi'(S+v)]) for a single shift v.
inline PayoffTerms expect_payoff_terms(const VoteTotalDistribution& dist,
                                       const PayoffFunction& p, double shift) {
    PayoffTerms t;
    t.EPsi = std::clamp(dist.expect_shifted(p.Psi, shift), -1.0, 1.0);
    t.Epsi = std::max(dist.expect_shifted(p.psi, shift), 0.0);
    t.Epsi_prime = dist.expect_shifted(p.psi_prime, shift);
    return t;
}

namespace detail {

// One mass point of the discretized single-vote law.
struct MassPoint {
    double v;
    double w;
};

// Pushforward of F through the strategy's moderate branch (u >= u_star when
// a cutoff is present), as Gauss-Legendre mass points per refined grid cell.
// Exact for per-cell-linear v and per-cell-cubic f * v^2, so the first two
// moments of the discretization carry quadrature-level accuracy. Cells are
// refined until the point spacing in vote space stays below half the target
// grid width, which keeps the deposited density smooth.
inline std::vector<MassPoint> pushforward_points(const VoteStrategy& s,
                                                 const ValueDistribution& F,
                                                 double u_from, double target_h) {
    static constexpr double xg = 0.577350269189625764509148780502;  // GL2 node
    std::vector<MassPoint> pts;
    pts.reserve((s.grid_u.size() - 1) * 8);
    for (std::size_t i = 0; i + 1 < s.grid_u.size(); ++i) {
        double a = s.grid_u[i], b = s.grid_u[i + 1];
        if (b <= u_from) continue;
        a = std::max(a, u_from);
        const double va = evaluate(s, a), vb = evaluate(s, b);
        int refine = 4;
        if (target_h > 0.0) {
            const double span_v = std::abs(vb - va);
            refine = std::max(refine,
                              static_cast<int>(std::ceil(span_v / (0.5 * target_h))));
            refine = std::min(refine, 512);
        }
        for (int r = 0; r < refine; ++r) {
            const double ca = a + (b - a) * r / refine;
            const double cb = a + (b - a) * (r + 1) / refine;
            const double mid = 0.5 * (ca + cb), half = 0.5 * (cb - ca);
            for (double sgn : {-1.0, 1.0}) {
                const double u = mid + sgn * half * xg;
                const double t = (u - a) / (b - a);
                const double v = va + t * (vb - va);
                pts.push_back({v, F.density(u) * half});
            }
        }
    }
    return pts;
}

struct DepositResult {
    std::vector<double> pmf;  // wrap-at-zero masses, total = mass of the points
    double mass = 0.0;
    double mean = 0.0;  // of the point set (exact)
    double var = 0.0;   // of the point set (exact)
};

// Deposit points centered at their mean onto a wrapped grid of width h,
// linear split between neighbours. An affine rescale around the mean is
// iterated so the deposited variance matches the point-set variance; the
// split otherwise inflates it by O(h^2).
inline DepositResult deposit_centered(const std::vector<MassPoint>& pts, std::size_t g,
                                      double h) {
    DepositResult res;
    res.pmf.assign(g, 0.0);
    KahanSum w_acc, wv_acc, wvv_acc;
    for (const auto& p : pts) {
        w_acc.add(p.w);
        wv_acc.add(p.w * p.v);
        wvv_acc.add(p.w * p.v * p.v);
    }
    res.mass = w_acc.value();
    if (res.mass <= 0.0) throw std::runtime_error("vote grid: empty pushforward");
    res.mean = wv_acc.value() / res.mass;
    res.var = std::max(wvv_acc.value() / res.mass - res.mean * res.mean, 0.0);

    double scale = 1.0;
    for (int pass = 0; pass < 4; ++pass) {
        std::fill(res.pmf.begin(), res.pmf.end(), 0.0);
        KahanSum dm, dvv;
        for (const auto& p : pts) {
            const double pos = (p.v - res.mean) * scale / h;
            double fl = std::floor(pos);
            const double t = pos - fl;
            long i0 = static_cast<long>(fl) % static_cast<long>(g);
            if (i0 < 0) i0 += static_cast<long>(g);
            const std::size_t i1 = (static_cast<std::size_t>(i0) + 1) % g;
            res.pmf[static_cast<std::size_t>(i0)] += p.w * (1.0 - t);
            res.pmf[i1] += p.w * t;
            const double x0 = fl * h, x1 = (fl + 1.0) * h;
            dm.add(p.w * ((1.0 - t) * x0 + t * x1));
            dvv.add(p.w * ((1.0 - t) * x0 * x0 + t * x1 * x1));
        }
        const double dmean = dm.value() / res.mass;
        const double dvar = std::max(dvv.value() / res.mass - dmean * dmean, 0.0);
        if (res.var <= 0.0 || dvar <= 0.0) break;
        const double ratio = res.var / dvar;
        if (std::abs(ratio - 1.0) < 1e-13) break;
        scale *= std::sqrt(ratio);
    }
    return res;
}

// Shift a centered (wrap-at-zero rolled) density by a real offset, linear split.
inline void add_shifted(std::vector<double>& acc, const std::vector<double>& src,
                        double weight, double offset_cells) {
    const long g = static_cast<long>(src.size());
    const double fl = std::floor(offset_cells);
    const double t = offset_cells - fl;
    const long k = static_cast<long>(fl);
    for (long j = 0; j < g; ++j) {
        const long j0 = j + k;
        if (j0 >= 0 && j0 < g) acc[static_cast<std::size_t>(j0)] += weight * src[j] * (1.0 - t);
        if (j0 + 1 >= 0 && j0 + 1 < g)
            acc[static_cast<std::size_t>(j0 + 1)] += weight * src[j] * t;
    }
}

inline std::vector<double> roll_center(const std::vector<double>& wrapped) {
    const std::size_t g = wrapped.size();
    std::vector<double> out(g);
    for (std::size_t i = 0; i < g; ++i) out[i] = wrapped[(i + g / 2) % g];
    return out;
}

}  // namespace detail

/// Law of S_n under `strategy` with values drawn from F. The moderate branch
/// goes through an FFT characteristic-function power; an extremist atom is
/// decomposed exactly over M = 0, 1, 2 extremists (M binomial(n, q)) with the
/// M >= 3 remainder reported as tail_bound rather than smeared onto the grid.
inline VoteTotalDistribution vote_total_distribution(const VoteStrategy& strategy,
                                                     const ValueDistribution& F, long n,
                                                     const GridSpec& spec = {},
                                                     bool check_strategy = true) {
    if (n < 1) throw std::invalid_argument("vote_total_distribution: n must be >= 1");
    // solver internals probe off-equilibrium strategies that need not satisfy
    // the equilibrium invariants; they pass check_strategy = false
    if (check_strategy) validate(strategy);

    const bool atom = strategy.cutoff.has_value() &&
                      strategy.cutoff->u_star > F.u_lo();
    const double u_star = atom ? strategy.cutoff->u_star : F.u_lo();
    const double v_ext = atom ? strategy.cutoff->v_extremist : 0.0;
    double q = 0.0;
    if (atom) {
        q = integrate_adaptive([&](double u) { return F.density(u); }, F.u_lo(), u_star,
                               1e-14, 1e-12);
        q = std::clamp(q, 0.0, 1.0);
    }

    // coarse pass pins the moments; the deposit pass below re-generates the
    // points fine enough for the selected grid width
    const auto coarse = detail::pushforward_points(strategy, F, u_star, 0.0);

    // exact full-law moments (atom included)
    KahanSum w_acc, wv_acc, wvv_acc;
    for (const auto& p : coarse) {
        w_acc.add(p.w);
        wv_acc.add(p.w * p.v);
        wvv_acc.add(p.w * p.v * p.v);
    }
    const double mod_mass = w_acc.value();
    const double ev = wv_acc.value() + q * v_ext;
    const double evv = wvv_acc.value() + q * v_ext * v_ext;

    int size_log2 = spec.size_log2;
    int attempts = 0;
    while (true) {
        const std::size_t g = std::size_t{1} << size_log2;

        // span: cover the moderate bump, the atom shifts, and span_min in
        // absolute coordinates, all relative to the M = 0 center n * m1.
        const double m1 = wv_acc.value() / mod_mass;
        const double var1 =
            std::max(wvv_acc.value() / mod_mass - m1 * m1, 0.0);
        const double sd_n = std::sqrt(static_cast<double>(n) * var1);
        const double center = static_cast<double>(n) * m1;
        const double shift_span = atom ? 2.0 * std::abs(v_ext - m1) : 0.0;
        double half = spec.sd_mult * sd_n + shift_span;
        if (spec.span_min > 0.0) half = std::max(half, spec.span_min + std::abs(center));
        half = std::max(half, 64.0 * (spec.h_max > 0.0 ? spec.h_max : 1e-3));
        double h = 2.0 * half / static_cast<double>(g);
        if (spec.h_max > 0.0 && h > spec.h_max) {
            if (size_log2 < 20) {
                ++size_log2;
                continue;
            }
            h = spec.h_max;
            half = 0.5 * h * static_cast<double>(g);
        }

        const auto pts = detail::pushforward_points(strategy, F, u_star, h);
        auto dep = detail::deposit_centered(pts, g, h);
        // conditional (mass-1) law of a moderate vote
        std::vector<double> pmf = dep.pmf;
        for (auto& x : pmf) x /= dep.mass;

        auto cf = fft_forward_real(pmf);

        VoteTotalDistribution out;
        out.n = n;
        out.dx = h;
        out.mean = static_cast<double>(n) * ev;
        out.var = static_cast<double>(n) * std::max(evv - ev * ev, 0.0);
        out.has_atom = atom;
        out.atom_q = q;
        out.atom_v = v_ext;

        std::vector<double> acc(g, 0.0);
        const int m_max = atom ? std::min<long>(2, n) : 0;
        double kept = 0.0;
        for (int m = 0; m <= m_max; ++m) {
            const double nn = static_cast<double>(n);
            const double binom = (m == 0) ? 1.0 : (m == 1 ? nn : 0.5 * nn * (nn - 1.0));
            const double weight =
                binom * std::pow(q, m) * std::pow(1.0 - q, static_cast<double>(n - m));
            if (weight <= 0.0 && m > 0) continue;
            kept += weight;
            std::vector<std::complex<double>> ft(cf);
            for (auto& z : ft) z = cf_pow(z, n - m);
            auto comp = fft_inverse_real(std::move(ft));
            for (auto& x : comp)
                if (x < 0.0) x = 0.0;
            auto centered = detail::roll_center(comp);
            // component m lives at (n - m) * m1 + m * v_ext; grid frame is n * m1
            const double offset = static_cast<double>(m) * (v_ext - dep.mean);
            detail::add_shifted(acc, centered, weight, offset / h);
        }
        out.mixture_mass = kept;
        out.tail_bound = atom ? std::max(1.0 - kept, 0.0) : 0.0;

        out.s0 = static_cast<double>(n) * dep.mean - 0.5 * h * static_cast<double>(g);
        out.pdf.assign(g, 0.0);
        for (std::size_t i = 0; i < g; ++i) out.pdf[i] = std::max(acc[i], 0.0) / h;

        // leakage: mass parked in the outer 1% of cells means the wrap
        // convolution aliased and the grid must widen
        const std::size_t edge = std::max<std::size_t>(g / 100, 2);
        double leak = 0.0;
        for (std::size_t i = 0; i < edge; ++i) leak += acc[i] + acc[g - 1 - i];
        if (leak > 1e-6 && attempts < spec.max_widen) {
            ++attempts;
            if (size_log2 < 20) ++size_log2;
            continue;
        }
        if (leak > 1e-6)
            throw std::runtime_error("vote_total_distribution: grid too coarse (mass leakage)");
        return out;
    }
}

}  // namespace qv
