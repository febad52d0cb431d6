#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qv/distributions.hpp"

using namespace qv;

namespace {

FamilySpec uniform_spec(double lo = -1.0, double hi = 1.0) {
    FamilySpec s;
    s.family = Family::Uniform;
    s.u_lo = lo;
    s.u_hi = hi;
    return s;
}

// the mu = 0, mu3 != 0 tilt used across the diagnostics: gamma chosen so the
// mean vanishes on [-1, b]
FamilySpec centered_tilt_spec(double b = 1.9) {
    FamilySpec s;
    s.family = Family::LinearTilt;
    s.u_lo = -1.0;
    s.u_hi = b;
    s.gamma = -3.0 * (b * b - 1.0) / (2.0 * (b * b * b + 1.0));
    return s;
}

}  // namespace

TEST_CASE("uniform[-1,1] moments", "[distributions]") {
    const auto F = make_distribution(uniform_spec());
    const Moments m = moments(F);
    CHECK(m.mu == Catch::Approx(0.0).margin(1e-12));
    CHECK(m.sigma2 == Catch::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(m.mu3_raw == Catch::Approx(0.0).margin(1e-12));
    CHECK(m.e_abs_u == Catch::Approx(0.5).epsilon(1e-10));
    CHECK(F.density(0.123) == Catch::Approx(0.5));
}

TEST_CASE("linear tilt density normalizes and has the quadrature moments",
          "[distributions]") {
    // f(u) = (1 + u/2) / 2 on [-1, 1]
    FamilySpec s;
    s.family = Family::LinearTilt;
    s.u_lo = -1.0;
    s.u_hi = 1.0;
    s.gamma = 0.5;
    const auto F = make_distribution(s);
    CHECK(integrate_adaptive([&](double u) { return F.density(u); }, -1.0, 1.0, 1e-13,
                             1e-12) == Catch::Approx(1.0).margin(1e-10));
    const Moments m = moments(F);
    // quadrature oracle: mu = gamma/3, sigma2 = 1/3 - mu^2
    CHECK(m.mu == Catch::Approx(1.0 / 6.0).epsilon(1e-9));
    CHECK(m.sigma2 == Catch::Approx(11.0 / 36.0).epsilon(1e-9));
}

TEST_CASE("support normalization is enforced", "[distributions]") {
    CHECK_THROWS_AS(make_distribution(uniform_spec(-0.5, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(make_distribution(uniform_spec(-1.0, 0.5)), std::invalid_argument);
    CHECK_THROWS_AS(make_distribution(uniform_spec(1.0, 2.0)), std::invalid_argument);
}

TEST_CASE("density floor is enforced", "[distributions]") {
    // tilt with f(-1) = 0 violates "bounded away from zero"
    FamilySpec s;
    s.family = Family::LinearTilt;
    s.u_lo = -1.0;
    s.u_hi = 1.0;
    s.gamma = 1.0;
    CHECK_THROWS_AS(make_distribution(s), std::invalid_argument);
}

TEST_CASE("sampling is deterministic and in-support", "[distributions]") {
    const auto F = make_distribution(uniform_spec());
    const auto a = sample(F, 10000, 7);
    const auto b = sample(F, 10000, 7);
    CHECK(a == b);
    for (double u : a) {
        CHECK(u >= -1.0);
        CHECK(u <= 1.0);
    }
    double mean = 0.0;
    const auto big = sample(F, 100000, 7);
    for (double u : big) mean += u;
    mean /= static_cast<double>(big.size());
    const double sigma = std::sqrt(1.0 / 3.0);
    CHECK(std::abs(mean) < 3.0 * sigma / std::sqrt(1e5));
}

TEST_CASE("tilt sampler passes a KS test against its own CDF", "[distributions]") {
    FamilySpec s;
    s.family = Family::LinearTilt;
    s.u_lo = -1.0;
    s.u_hi = 1.0;
    s.gamma = 0.5;
    const auto F = make_distribution(s);
    const std::size_t n = 1000000;
    auto xs = sample(F, n, 1);
    std::sort(xs.begin(), xs.end());
    // closed-form CDF: F(u) = ((u + 1) + gamma (u^2 - 1) / 2) / 2 for gamma = 1/2
    auto cdf = [](double u) { return ((u + 1.0) + 0.25 * (u * u - 1.0)) / 2.0; };
    double ks = 0.0;
    for (std::size_t i = 0; i < n; i += 31) {
        const double c = cdf(xs[i]);
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - c));
        ks = std::max(ks, std::abs(static_cast<double>(i) / n - c));
    }
    // KS critical value at alpha = 0.01 for n = 1e6 is ~0.00163
    CHECK(ks < 0.002);
}

TEST_CASE("quantile inverts the cdf", "[distributions]") {
    const auto F = make_distribution(centered_tilt_spec());
    for (double p : {1e-6, 1e-4, 0.1, 0.5, 0.9, 0.999999}) {
        const double u = F.quantile(p);
        CHECK(F.cdf(u) == Catch::Approx(p).margin(2e-7));
    }
}

TEST_CASE("integrate matches closed forms", "[distributions]") {
    const auto F = make_distribution(uniform_spec());
    CHECK(integrate(F, [](double) { return 1.0; }) == Catch::Approx(1.0).margin(1e-10));
    CHECK(integrate(F, [](double u) { return u; }) == Catch::Approx(0.0).margin(1e-10));

    FamilySpec s;
    s.family = Family::LinearTilt;
    s.u_lo = -1.0;
    s.u_hi = 1.0;
    s.gamma = 0.5;
    const auto T = make_distribution(s);
    CHECK(integrate(T, [](double u) { return u * u; }) ==
          Catch::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK_THROWS(integrate(T, [](double u) { return 1.0 / (u - 0.2); }));
}

TEST_CASE("moments agree with Monte Carlo within 4 standard errors",
          "[distributions][slow-ish]") {
    for (const FamilySpec& s :
         {uniform_spec(), centered_tilt_spec(),
          FamilySpec{Family::TruncNormal, -1.0, 1.4, 0.0, -0.0022, 0.28, 0.01}}) {
        const auto F = make_distribution(s);
        const Moments m = moments(F);
        const std::size_t n = 2000000;
        const auto xs = sample(F, n, 31);
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, sa = 0.0;
        for (double u : xs) {
            s1 += u;
            s2 += u * u;
            s3 += u * u * u;
            sa += std::abs(u);
        }
        const double inv = 1.0 / static_cast<double>(n);
        const double se1 = std::sqrt(m.sigma2 * inv);
        CHECK(std::abs(s1 * inv - m.mu) < 4.0 * se1);
        CHECK(std::abs(s2 * inv - (m.sigma2 + m.mu * m.mu)) <
              4.0 * std::sqrt(integrate(F, [&](double u) {
                  const double d = u * u - (m.sigma2 + m.mu * m.mu);
                  return d * d;
              }) * inv));
        CHECK(std::abs(s3 * inv - m.mu3_raw) <
              4.0 * std::sqrt(integrate(F, [&](double u) {
                  const double d = u * u * u - m.mu3_raw;
                  return d * d;
              }) * inv));
        CHECK(std::abs(sa * inv - m.e_abs_u) <
              4.0 * std::sqrt(integrate(F, [&](double u) {
                  const double d = std::abs(u) - m.e_abs_u;
                  return d * d;
              }) * inv));
    }
}

TEST_CASE("sample/integrate consistency across a 100-seed suite", "[distributions]") {
    const auto F = make_distribution(uniform_spec());
    const Moments m = moments(F);
    const double sigma = std::sqrt(m.sigma2);
    int fails = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto xs = sample(F, 1000000, s);
        double mean = 0.0;
        for (double u : xs) mean += u;
        mean /= static_cast<double>(xs.size());
        if (std::abs(mean - m.mu) >= 5.0 * sigma / 1e3) ++fails;
    }
    CHECK(fails <= 1);  // 99% of seeds
}

TEST_CASE("trunc normal with floor stays above the density floor",
          "[distributions]") {
    FamilySpec s;
    s.family = Family::TruncNormal;
    s.u_lo = -1.0;
    s.u_hi = 1.4;
    s.mean = 0.0;
    s.sd = 0.15;
    s.mix_eps = 0.01;
    const auto F = make_distribution(s);
    double fmin = 1e300;
    for (int i = 0; i <= 10000; ++i) {
        const double u = -1.0 + 2.4 * i / 10000.0;
        fmin = std::min(fmin, F.density(u));
    }
    CHECK(fmin >= kDensityFloor);
    CHECK(integrate(F, [](double) { return 1.0; }) == Catch::Approx(1.0).margin(1e-10));
}
