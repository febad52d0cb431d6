#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qv/distributions.hpp"
#include "qv/payoff.hpp"
#include "qv/simulation.hpp"
#include "qv/strategy.hpp"

using namespace qv;

namespace {

ValueDistribution uniform_dist() {
    FamilySpec s;
    s.family = Family::Uniform;
    s.u_lo = -1.0;
    s.u_hi = 1.0;
    return make_distribution(s);
}

}  // namespace

TEST_CASE("zero strategy: V = 0, fair coin, no transfers", "[simulation]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.5);
    const auto s = make_linear_strategy(-1.0, 1.0, 0.0, 101);
    auto out = run_election(s, F, 50, 7);
    score_election(out, P, 7);
    CHECK(out.V == 0.0);
    CHECK(out.outcome_prob == Catch::Approx(0.5));
    for (double p : out.payments) CHECK(p == 0.0);
    for (double r : out.refunds) CHECK(r == 0.0);
    CHECK(out.realized_welfare == 0.0);
}

TEST_CASE("budget balance holds exactly", "[simulation]") {
    const auto F = uniform_dist();
    const auto s = make_linear_strategy(-1.0, 1.0, 0.05, 801);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto out = run_election(s, F, 2000, seed);
        KahanSum pay, ref;
        for (double p : out.payments) pay.add(p);
        for (double r : out.refunds) ref.add(r);
        CHECK(std::abs(pay.value() - ref.value()) <= 1e-12 * pay.value());
    }
}

TEST_CASE("elections are deterministic per seed", "[simulation]") {
    const auto F = uniform_dist();
    const auto s = make_linear_strategy(-1.0, 1.0, 0.05, 801);
    const auto a = run_election(s, F, 500, 42);
    const auto b = run_election(s, F, 500, 42);
    CHECK(a.values == b.values);
    CHECK(a.votes == b.votes);
    CHECK(a.V == b.V);
}

TEST_CASE("EI of the zero strategy is one half", "[simulation]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.5);
    const auto s = make_linear_strategy(-1.0, 1.0, 0.0, 101);
    const auto est = estimate_EI(s, F, P, 101, 2000, 3);
    CHECK(est.ei == Catch::Approx(0.5).margin(1e-12));  // Psi(0) = 0 exactly
    CHECK(est.n_extremist_elections == 0);
}

TEST_CASE("aligned strategy is nearly efficient, anti-aligned is worse than random",
          "[simulation]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.5);
    const auto aligned = make_linear_strategy(-1.0, 1.0, 0.05, 801);
    const auto est = estimate_EI(aligned, F, P, 1001, 20000, 11);
    CHECK(est.ei + 3.0 * est.std_err < 0.05);

    // anti-aligned votes flip the sign of E[U Psi(V)]; build it directly since
    // validate() rightly rejects it as a strategy
    VoteStrategy anti = make_linear_strategy(-1.0, 1.0, 0.05, 801);
    for (auto& v : anti.grid_v) v = -v;
    detail::FastStrategyEval ev(anti);
    Rng check_rng(5);
    KahanSum sx, sb;
    const long reps = 20000, N = 1001;
    for (long r = 0; r < reps; ++r) {
        Rng rng(derive_seed(5, r));
        KahanSum usum, vsum;
        for (long i = 0; i < N; ++i) {
            const double u = F.draw(rng);
            usum.add(u);
            vsum.add(ev(u));
        }
        sx.add(std::abs(usum.value()) - usum.value() * P.Psi(vsum.value()));
        sb.add(std::abs(usum.value()));
    }
    const double ei_anti = sx.value() / (2.0 * sb.value());
    CHECK(ei_anti > 0.45);
}

TEST_CASE("estimate_EI validates its preconditions", "[simulation]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.5);
    const auto s = make_linear_strategy(-1.0, 1.0, 0.05, 101);
    CHECK_THROWS_AS(estimate_EI(s, F, P, 101, 99, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_EI(s, F, P, 1, 1000, 1), std::invalid_argument);
}

TEST_CASE("extremist counting matches the binomial oracle", "[simulation]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.3);
    auto s = make_linear_strategy(-1.0, 1.0, 0.01, 801);
    s.cutoff = Cutoff{-0.998, -1.3};  // q = 0.001 under uniform
    const long N = 500, reps = 20000;
    const auto est = estimate_EI(s, F, P, N, reps, 9);
    const double q = 0.001;
    const double p_any = 1.0 - std::pow(1.0 - q, static_cast<double>(N));
    const double se = std::sqrt(p_any * (1.0 - p_any) / static_cast<double>(reps));
    CHECK(std::abs(est.extremist_rate - p_any) < 3.0 * se);
}

TEST_CASE("sweep rejects unsorted N lists", "[simulation]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.5);
    auto solver = [&](long) {
        return SweepSolved{make_linear_strategy(-1.0, 1.0, 0.05, 101), true, 0.1};
    };
    CHECK_THROWS_AS(sweep_EI(solver, F, P, {300, 100}, 200, 1),
                    std::invalid_argument);
    const auto rows = sweep_EI(solver, F, P, {101, 301}, 200, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].N == 101);
    CHECK(rows[1].estimate.reps == 200);
}
