#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qv/distributions.hpp"
#include "qv/payoff.hpp"
#include "qv/quadrature.hpp"
#include "qv/rng.hpp"
#include "qv/strategy.hpp"

namespace qv {

/// One simulated election: values, votes, transfers and outcome data.
struct ElectionOutcome {
    std::vector<double> values;
    std::vector<double> votes;
    double V = 0.0;                 // vote total
    std::vector<double> payments;   // v_i^2
    std::vector<double> refunds;    // sum_{j != i} v_j^2 / (N - 1)
    double outcome_prob = 0.0;      // (Psi(V) + 1) / 2
    double realized_welfare = 0.0;  // U * Psi(V)
    int outcome = 0;                // sampled alternative, 0 or 1
    int n_extremists = 0;           // values below the strategy cutoff
};

struct EIEstimate {
    double ei = 0.0;
    double std_err = 0.0;
    long reps = 0;
    long n_extremist_elections = 0;
    // split reported alongside the headline number; the V < 0 event in the
    // Theorem-3 regime is carried almost entirely by extremist elections
    double ei_no_extremist = 0.0;
    double extremist_rate = 0.0;  // fraction of elections with >= 1 extremist
    double v_mean = 0.0;
    double v_var = 0.0;
};

namespace detail {

// Strategy evaluation specialized for tight Monte Carlo loops: uniform-grid
// direct indexing instead of a binary search per agent.
class FastStrategyEval {
  public:
    explicit FastStrategyEval(const VoteStrategy& s) : s_(s) {
        u0_ = s.grid_u.front();
        const double h = s.grid_u[1] - s.grid_u[0];
        uniform_ = true;
        for (std::size_t i = 0; i + 1 < s.grid_u.size(); ++i) {
            if (std::abs((s.grid_u[i + 1] - s.grid_u[i]) - h) > 1e-9 * h) {
                uniform_ = false;
                break;
            }
        }
        inv_h_ = 1.0 / h;
        if (s.cutoff) {
            u_star_ = s.cutoff->u_star;
            v_ext_ = s.cutoff->v_extremist;
            has_cut_ = true;
        }
    }

    double operator()(double u) const {
        if (has_cut_ && u < u_star_) return v_ext_;
        if (!uniform_) return evaluate(s_, u);
        double pos = (u - u0_) * inv_h_;
        if (pos <= 0.0) return s_.grid_v.front();
        std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= s_.grid_v.size()) return s_.grid_v.back();
        const double t = pos - static_cast<double>(i);
        return s_.grid_v[i] + t * (s_.grid_v[i + 1] - s_.grid_v[i]);
    }

    bool is_extremist(double u) const { return has_cut_ && u < u_star_; }

  private:
    const VoteStrategy& s_;
    double u0_ = 0.0, inv_h_ = 0.0;
    bool uniform_ = false, has_cut_ = false;
    double u_star_ = 0.0, v_ext_ = 0.0;
};

}  // namespace detail

/// Simulate one election with N voters; deterministic per seed.
inline ElectionOutcome run_election(const VoteStrategy& strategy,
                                    const ValueDistribution& F, long N,
                                    std::uint64_t seed) {
    if (N < 2) throw std::invalid_argument("run_election: N must be >= 2");
    validate(strategy);
    detail::FastStrategyEval ev(strategy);
    ElectionOutcome out;
    out.values.resize(N);
    out.votes.resize(N);
    out.payments.resize(N);
    out.refunds.resize(N);
    Rng rng(seed);
    KahanSum vsum, paysum;
    for (long i = 0; i < N; ++i) {
        const double u = F.draw(rng);
        const double v = ev(u);
        out.values[i] = u;
        out.votes[i] = v;
        out.payments[i] = v * v;
        vsum.add(v);
        paysum.add(v * v);
        if (ev.is_extremist(u)) ++out.n_extremists;
    }
    out.V = vsum.value();
    const double total_pay = paysum.value();
    for (long i = 0; i < N; ++i)
        out.refunds[i] = (total_pay - out.payments[i]) / static_cast<double>(N - 1);
    return out;
}

/// Attach the payoff-dependent fields (needs Psi).
inline void score_election(ElectionOutcome& out, const PayoffFunction& P,
                           std::uint64_t seed) {
    const double psi_v = P.Psi(out.V);
    out.outcome_prob = 0.5 * (psi_v + 1.0);
    KahanSum usum;
    for (double u : out.values) usum.add(u);
    out.realized_welfare = usum.value() * psi_v;
    Rng rng(seed ^ 0xabcdef1234567890ULL);
    out.outcome = rng.u01() < out.outcome_prob ? 1 : 0;
}

/// Paired Monte Carlo estimator of the expected inefficiency
/// EI = 1/2 - E[U Psi(V)] / (2 E|U|). The numerator and E|U| share
/// replicates, and the outcome draw is never sampled: Psi(V) is the exact
/// conditional expectation, which removes the randomization noise.
inline EIEstimate estimate_EI(const VoteStrategy& strategy, const ValueDistribution& F,
                              const PayoffFunction& P, long N, long reps,
                              std::uint64_t seed) {
    if (reps < 100) throw std::invalid_argument("estimate_EI: reps must be >= 100");
    if (N < 2) throw std::invalid_argument("estimate_EI: N must be >= 2");
    validate(strategy);
    detail::FastStrategyEval ev(strategy);

    // per-replicate X = |U| - U Psi(V) and B = |U|; EI = mean(X) / (2 mean(B))
    KahanSum sx, sb, sxx, sbb, sxb, sv, svv, sx_noext, sb_noext;
    long n_ext_elections = 0;
    long reps_noext = 0;
    for (long r = 0; r < reps; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        KahanSum usum, vsum;
        int ext = 0;
        for (long i = 0; i < N; ++i) {
            const double u = F.draw(rng);
            usum.add(u);
            vsum.add(ev(u));
            if (ev.is_extremist(u)) ++ext;
        }
        const double U = usum.value();
        const double V = vsum.value();
        const double x = std::abs(U) - U * P.Psi(V);
        const double b = std::abs(U);
        sx.add(x);
        sb.add(b);
        sxx.add(x * x);
        sbb.add(b * b);
        sxb.add(x * b);
        sv.add(V);
        svv.add(V * V);
        if (ext > 0) {
            ++n_ext_elections;
        } else {
            ++reps_noext;
            sx_noext.add(x);
            sb_noext.add(b);
        }
    }
    const double R = static_cast<double>(reps);
    const double mx = sx.value() / R;
    const double mb = sb.value() / R;
    const double vx = std::max(sxx.value() / R - mx * mx, 0.0);
    const double vb = std::max(sbb.value() / R - mb * mb, 0.0);
    const double cxb = sxb.value() / R - mx * mb;

    EIEstimate est;
    est.reps = reps;
    est.ei = mx / (2.0 * mb);
    // delta-method variance of the ratio estimator
    const double var_ratio =
        (vx / (mb * mb) + mx * mx * vb / (mb * mb * mb * mb) -
         2.0 * mx * cxb / (mb * mb * mb)) /
        R;
    est.std_err = 0.5 * std::sqrt(std::max(var_ratio, 0.0));
    est.n_extremist_elections = n_ext_elections;
    est.extremist_rate = static_cast<double>(n_ext_elections) / R;
    est.v_mean = sv.value() / R;
    est.v_var = std::max(svv.value() / R - est.v_mean * est.v_mean, 0.0);
    if (reps_noext > 0) {
        est.ei_no_extremist =
            (sx_noext.value() / reps_noext) / (2.0 * sb_noext.value() / reps_noext);
    }
    return est;
}

/// What the sweep needs back from the per-N equilibrium solve.
struct SweepSolved {
    VoteStrategy strategy;
    bool converged = true;
    double p_hat = 0.0;
};

struct SweepRow {
    long N = 0;
    EIEstimate estimate;
    bool converged = true;
    double p_hat = 0.0;
};

/// One EI estimate per N, with the equilibrium re-solved at each N through
/// the supplied callback (long N -> SweepSolved). Non-convergence flags the
/// row and keeps it.
template <class SolveFn>
inline std::vector<SweepRow> sweep_EI(SolveFn&& solver, const ValueDistribution& F,
                                      const PayoffFunction& P,
                                      const std::vector<long>& n_list, long reps,
                                      std::uint64_t seed) {
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
        if (n_list[i] >= n_list[i + 1])
            throw std::invalid_argument("sweep_EI: N_list must be strictly ascending");
    std::vector<SweepRow> rows;
    rows.reserve(n_list.size());
    for (long N : n_list) {
        SweepRow row;
        row.N = N;
        SweepSolved solved = solver(N);
        row.converged = solved.converged;
        row.p_hat = solved.p_hat;
        row.estimate = estimate_EI(solved.strategy, F, P, N, reps,
                                   derive_seed(seed, static_cast<std::uint64_t>(N)));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace qv
