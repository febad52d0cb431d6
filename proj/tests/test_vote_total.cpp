#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qv/distributions.hpp"
#include "qv/payoff.hpp"
#include "qv/rng.hpp"
#include "qv/strategy.hpp"
#include "qv/vote_total.hpp"

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

TEST_CASE("zero strategy collapses to a point mass at 0", "[vote_total]") {
    const auto F = uniform_dist();
    const auto s = make_linear_strategy(-1.0, 1.0, 0.0, 101);
    const auto dist = vote_total_distribution(s, F, 1000);
    CHECK(dist.mean == Catch::Approx(0.0).margin(1e-12));
    CHECK(dist.var == Catch::Approx(0.0).margin(1e-12));
    // all mass within one cell of zero
    double off_mass = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (std::abs(dist.coord(i)) > dist.dx) off_mass += dist.pdf[i] * dist.dx;
    CHECK(off_mass < 1e-12);
    CHECK(dist.trapezoid_mass() == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("n = 1 recovers the single-vote law", "[vote_total]") {
    const auto F = uniform_dist();
    const double c = 0.05;
    const auto s = make_linear_strategy(-1.0, 1.0, c, 801);
    const auto dist = vote_total_distribution(s, F, 1);
    // pushforward of uniform through v = c u: density 1 / (2c) on [-c, c]
    const double target = 1.0 / (2.0 * c);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double x = dist.coord(i);
        if (std::abs(x) < c - 2.0 * dist.dx)
            CHECK(dist.pdf[i] == Catch::Approx(target).epsilon(2e-2));
        if (std::abs(x) > c + 2.0 * dist.dx) CHECK(dist.pdf[i] < 1e-9 * target);
    }
    CHECK(dist.trapezoid_mass() == Catch::Approx(1.0).margin(1e-8));
    CHECK(dist.grid_mean() == Catch::Approx(0.0).margin(1e-10));
    CHECK(dist.grid_var() == Catch::Approx(c * c / 3.0).epsilon(1e-9));
}

TEST_CASE("closed-form moments for a proportional strategy", "[vote_total]") {
    const auto F = uniform_dist();
    const double c = 0.05;
    const long n = 1000;
    const auto s = make_linear_strategy(-1.0, 1.0, c, 801);
    const auto dist = vote_total_distribution(s, F, n);
    const double want_var = n * c * c / 3.0;
    CHECK(std::abs(dist.mean - 0.0) < 1e-6);
    CHECK(std::abs(dist.var - want_var) < 1e-6 * std::max(1.0, want_var));
    // the grid sees the same moments
    CHECK(std::abs(dist.grid_mean() - dist.mean) < 1e-7);
    CHECK(std::abs(dist.grid_var() - dist.var) < 1e-6 * std::max(1.0, want_var));
    CHECK(dist.trapezoid_mass() == Catch::Approx(1.0).margin(1e-8));
    for (double p : dist.pdf) CHECK(p >= 0.0);
}

TEST_CASE("scaling the strategy scales the vote-total axis", "[vote_total]") {
    const auto F = uniform_dist();
    const auto s1 = make_linear_strategy(-1.0, 1.0, 0.04, 401);
    const auto s2 = make_linear_strategy(-1.0, 1.0, 0.08, 401);
    GridSpec g;
    g.size_log2 = 13;
    const auto d1 = vote_total_distribution(s1, F, 200, g);
    const auto d2 = vote_total_distribution(s2, F, 200, g);
    // densities related by d2(x) = d1(x / 2) / 2; compare CDF quantile-style
    CHECK(d2.var == Catch::Approx(4.0 * d1.var).epsilon(1e-10));
    const double q1 = d1.grid_var();
    const double q2 = d2.grid_var();
    CHECK(q2 == Catch::Approx(4.0 * q1).epsilon(1e-6));
}

TEST_CASE("payoff expectations against point masses", "[vote_total]") {
    const auto P = make_bump_payoff(0.5);
    // hand-built point mass at 2 delta = 1.0
    VoteTotalDistribution dist;
    dist.dx = 1e-3;
    dist.n = 1;
    dist.pdf.assign(513, 0.0);
    dist.s0 = 1.0 - 256 * dist.dx;
    dist.pdf[256] = 1.0 / dist.dx;
    dist.mean = 1.0;
    dist.var = 0.0;
    const auto t = expect_payoff_terms(dist, P, 0.0);
    CHECK(t.EPsi == Catch::Approx(1.0).margin(1e-12));
    CHECK(t.Epsi == Catch::Approx(0.0).margin(1e-12));
    CHECK(t.Epsi_prime == Catch::Approx(0.0).margin(1e-12));

    VoteTotalDistribution at0 = dist;
    at0.s0 = -256 * at0.dx;
    at0.mean = 0.0;
    const auto t0 = expect_payoff_terms(at0, P, 0.0);
    CHECK(t0.EPsi == Catch::Approx(0.0).margin(1e-12));
    CHECK(t0.Epsi == Catch::Approx(P.psi(0.0)).epsilon(1e-12));
    CHECK(t0.Epsi_prime == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("E psi matches Monte Carlo for a near-normal total", "[vote_total][slow-ish]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.5);
    const double c = 0.05;
    const long n = 1000;
    const auto s = make_linear_strategy(-1.0, 1.0, c, 801);
    GridSpec g;
    g.h_max = 0.5 / 40.0;
    const auto dist = vote_total_distribution(s, F, n, g);
    const auto t = expect_payoff_terms(dist, P, 0.0);

    // Monte Carlo oracle
    Rng rng(2024);
    const long reps = 400000;
    double acc = 0.0, acc2 = 0.0;
    for (long r = 0; r < reps; ++r) {
        double sum = 0.0;
        for (long i = 0; i < n; ++i) sum += c * (2.0 * rng.u01() - 1.0);
        const double v = P.psi(sum);
        acc += v;
        acc2 += v * v;
    }
    const double mc = acc / reps;
    const double se = std::sqrt((acc2 / reps - mc * mc) / reps);
    CHECK(std::abs(t.Epsi - mc) < 3.0 * se);
}

TEST_CASE("derivative consistency of the payoff expectations", "[vote_total]") {
    const auto F = uniform_dist();
    const auto P = make_bump_payoff(0.5);
    const auto s = make_linear_strategy(-1.0, 1.0, 0.05, 401);
    GridSpec g;
    g.h_max = 0.5 / 40.0;
    const auto dist = vote_total_distribution(s, F, 500, g);
    const double h = 1e-4;
    for (double v : {-0.3, 0.0, 0.2, 0.7}) {
        const double dPsi = (expect_payoff_terms(dist, P, v + h).EPsi -
                             expect_payoff_terms(dist, P, v - h).EPsi) /
                            (2.0 * h);
        CHECK(dPsi == Catch::Approx(expect_payoff_terms(dist, P, v).Epsi).margin(1e-5));
    }
}

TEST_CASE("atom mixture bookkeeping", "[vote_total]") {
    const auto F = uniform_dist();
    auto s = make_linear_strategy(-1.0, 1.0, 0.01, 801);
    s.cutoff = Cutoff{-0.98, -1.2};  // q = F(-0.98) = 0.01 under uniform
    const long n = 400;
    const auto dist = vote_total_distribution(s, F, n);
    CHECK(dist.has_atom);
    CHECK(dist.atom_q == Catch::Approx(0.01).epsilon(1e-9));
    const double q = dist.atom_q;
    double p3 = 1.0;
    // P(M >= 3) via the complement of m = 0, 1, 2
    const double nn = n;
    const double p0 = std::pow(1 - q, nn), p1 = nn * q * std::pow(1 - q, nn - 1),
                 p2 = 0.5 * nn * (nn - 1) * q * q * std::pow(1 - q, nn - 2);
    p3 = 1.0 - p0 - p1 - p2;
    CHECK(dist.mixture_mass == Catch::Approx(p0 + p1 + p2).epsilon(1e-12));
    CHECK(dist.tail_bound == Catch::Approx(p3).margin(1e-12));
    const double mass = dist.trapezoid_mass();
    CHECK(mass <= 1.0 + 1e-9);
    CHECK(mass >= 1.0 - p3 - 1e-9);
    // exact moments include the atom: E[v] = q v_e + int_{-0.98}^{1} 0.01 u f du
    const double integral = 0.01 * 0.5 * (1.0 - 0.98 * 0.98) / 2.0;
    CHECK(dist.mean == Catch::Approx(nn * (q * (-1.2) + integral)).epsilon(1e-9));
}

TEST_CASE("atom components sit at the shifted locations", "[vote_total]") {
    const auto F = uniform_dist();
    auto s = make_linear_strategy(-1.0, 1.0, 0.001, 401);
    s.cutoff = Cutoff{-0.9, -1.0};  // q = 0.05, big enough to see M = 1, 2
    const long n = 100;
    const auto dist = vote_total_distribution(s, F, n);
    // mass near -1 (one extremist) should be ~ n q (1-q)^(n-1)
    double near1 = 0.0, near2 = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double x = dist.coord(i);
        if (std::abs(x + 1.0) < 0.3) near1 += dist.pdf[i] * dist.dx;
        if (std::abs(x + 2.0) < 0.3) near2 += dist.pdf[i] * dist.dx;
    }
    const double q = dist.atom_q;
    const double nn = n;
    CHECK(near1 == Catch::Approx(nn * q * std::pow(1 - q, nn - 1)).epsilon(1e-6));
    CHECK(near2 ==
          Catch::Approx(0.5 * nn * (nn - 1) * q * q * std::pow(1 - q, nn - 2)).epsilon(1e-6));
}

TEST_CASE("precondition and aliasing errors", "[vote_total]") {
    const auto F = uniform_dist();
    const auto s = make_linear_strategy(-1.0, 1.0, 0.05, 101);
    CHECK_THROWS_AS(vote_total_distribution(s, F, 0), std::invalid_argument);
}
