#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qv/interp.hpp"
#include "qv/quadrature.hpp"
#include "qv/rng.hpp"

namespace qv {

/// Mean, variance, raw third moment and E|U| of a value distribution.
struct Moments {
    double mu = 0.0;
    double sigma2 = 0.0;
    double mu3_raw = 0.0;
    double e_abs_u = 0.0;
};

enum class Family { Uniform, LinearTilt, TruncNormal };

/// Parameters for one of the supported density families.
struct FamilySpec {
    Family family = Family::Uniform;
    double u_lo = -1.0;
    double u_hi = 1.0;
    double gamma = 0.0;    // linear-tilt slope
    double mean = 0.0;     // truncated-normal location
    double sd = 1.0;       // truncated-normal scale
    double mix_eps = 0.01; // uniform floor mixture for the truncated normal
};

inline constexpr double kDensityFloor = 1e-3;

/// Value distribution on [u_lo, u_hi] with a smooth density bounded away
/// from zero. Immutable after construction; sampling takes explicit seeds.
class ValueDistribution {
  public:
    explicit ValueDistribution(const FamilySpec& spec) : spec_(spec) {
        validate_support();
        build_density();
        check_density_floor();
        build_quantile_table();
        compute_moments();
        check_normalization();
    }

    double u_lo() const { return spec_.u_lo; }
    double u_hi() const { return spec_.u_hi; }
    const FamilySpec& spec() const { return spec_; }

    double density(double u) const {
        if (u < spec_.u_lo || u > spec_.u_hi) return 0.0;
        return pdf_(u);
    }

    double cdf(double u) const {
        if (u <= spec_.u_lo) return 0.0;
        if (u >= spec_.u_hi) return 1.0;
        return integrate_adaptive([this](double t) { return pdf_(t); }, spec_.u_lo, u,
                                  1e-13, 1e-12);
    }

    double quantile(double p) const {
        if (p <= 0.0) return spec_.u_lo;
        if (p >= 1.0) return spec_.u_hi;
        return quantile_(p);
    }

    const Moments& moments() const { return moments_; }

    /// Deterministic i.i.d. sample of `count` draws for the given seed.
    std::vector<double> sample(std::size_t count, std::uint64_t seed) const {
        if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
        Rng rng(seed);
        std::vector<double> out(count);
        for (auto& u : out) u = quantile_(rng.u01());
        return out;
    }

    /// Single draw from an externally managed generator stream.
    double draw(Rng& rng) const { return quantile_(rng.u01()); }

    /// Adaptive quadrature of E[g(U)] to 1e-10 absolute / 1e-9 relative.
    double expect(const std::function<double(double)>& g) const {
        return integrate_adaptive([&](double u) { return g(u) * pdf_(u); }, spec_.u_lo,
                                  spec_.u_hi, 1e-10, 1e-9);
    }

  private:
    void validate_support() {
        if (!(spec_.u_lo < 0.0) || !(spec_.u_hi > 0.0))
            throw std::invalid_argument("distribution: requires u_lo < 0 < u_hi");
        if (std::min(std::abs(spec_.u_lo), spec_.u_hi) < 1.0)
            throw std::invalid_argument(
                "distribution: normalization violated, min(|u_lo|, u_hi) must be >= 1");
    }

    void build_density() {
        const double lo = spec_.u_lo, hi = spec_.u_hi;
        switch (spec_.family) {
            case Family::Uniform: {
                const double d = 1.0 / (hi - lo);
                pdf_ = [d](double) { return d; };
                break;
            }
            case Family::LinearTilt: {
                const double g = spec_.gamma;
                const double z = (hi - lo) * (1.0 + 0.5 * g * (hi + lo));
                if (z <= 0.0) throw std::invalid_argument("linear-tilt: non-normalizable");
                pdf_ = [g, z](double u) { return (1.0 + g * u) / z; };
                break;
            }
            case Family::TruncNormal: {
                const double m = spec_.mean, s = spec_.sd, eps = spec_.mix_eps;
                if (s <= 0.0) throw std::invalid_argument("trunc-normal: sd must be > 0");
                if (eps < 0.0 || eps >= 1.0)
                    throw std::invalid_argument("trunc-normal: mix_eps must be in [0, 1)");
                const double z = integrate_adaptive(
                    [m, s](double u) { return std::exp(-0.5 * (u - m) * (u - m) / (s * s)); },
                    lo, hi, 1e-14, 1e-13);
                const double floor_d = eps / (hi - lo);
                pdf_ = [m, s, z, eps, floor_d](double u) {
                    return (1.0 - eps) * std::exp(-0.5 * (u - m) * (u - m) / (s * s)) / z +
                           floor_d;
                };
                break;
            }
        }
    }

    void check_density_floor() {
        double fmin = pdf_(spec_.u_lo);
        const int n = 10000;
        for (int i = 0; i <= n; ++i) {
            const double u = spec_.u_lo + (spec_.u_hi - spec_.u_lo) * i / n;
            fmin = std::min(fmin, pdf_(u));
        }
        if (!(fmin >= kDensityFloor))
            throw std::invalid_argument(
                "distribution: density not bounded away from zero (floor 1e-3)");
    }

    // Inverse CDF on 2^16 equi-probability nodes with a monotone spline;
    // the uniform probability axis gives the sampler O(1) cell lookup.
    void build_quantile_table() {
        constexpr int kCdfNodes = 1 << 16;
        std::vector<double> us(kCdfNodes + 1), cdf(kCdfNodes + 1);
        us[0] = spec_.u_lo;
        cdf[0] = 0.0;
        KahanSum acc;
        const double h = (spec_.u_hi - spec_.u_lo) / kCdfNodes;
        for (int i = 1; i <= kCdfNodes; ++i) {
            const double a = spec_.u_lo + (i - 1) * h;
            acc.add(integrate_composite(pdf_, a, a + h, 1));
            us[i] = spec_.u_lo + i * h;
            cdf[i] = acc.value();
        }
        const double total = cdf.back();
        for (auto& c : cdf) c /= total;
        cdf.back() = 1.0;
        // strictly increasing because the density has a positive floor
        MonotoneCubic inv(std::move(cdf), std::move(us));
        std::vector<double> ps(kCdfNodes + 1), qs(kCdfNodes + 1);
        for (int i = 0; i <= kCdfNodes; ++i) {
            ps[i] = static_cast<double>(i) / kCdfNodes;
            qs[i] = inv(ps[i]);
        }
        qs[0] = spec_.u_lo;
        qs[kCdfNodes] = spec_.u_hi;
        MonotoneCubic equi(std::move(ps), std::move(qs));
        quantile_ = [table = std::move(equi)](double p) { return table(p); };
    }

    void compute_moments() {
        moments_.mu = expect([](double u) { return u; });
        const double m2 = expect([](double u) { return u * u; });
        moments_.sigma2 = m2 - moments_.mu * moments_.mu;
        moments_.mu3_raw = expect([](double u) { return u * u * u; });
        moments_.e_abs_u = expect([](double u) { return std::abs(u); });
        if (!(moments_.sigma2 > 0.0))
            throw std::invalid_argument("distribution: degenerate variance");
    }

    void check_normalization() const {
        const double mass = integrate_adaptive(pdf_, spec_.u_lo, spec_.u_hi, 1e-12, 1e-12);
        if (std::abs(mass - 1.0) > 1e-10)
            throw std::invalid_argument("distribution: density does not integrate to 1");
    }

    FamilySpec spec_;
    std::function<double(double)> pdf_;
    std::function<double(double)> quantile_;
    Moments moments_;
};

inline ValueDistribution make_distribution(const FamilySpec& spec) {
    return ValueDistribution(spec);
}

inline Moments moments(const ValueDistribution& f) { return f.moments(); }

inline std::vector<double> sample(const ValueDistribution& f, std::size_t count,
                                  std::uint64_t seed) {
    return f.sample(count, seed);
}

inline double integrate(const ValueDistribution& f,
                        const std::function<double(double)>& g) {
    return f.expect(g);
}

inline Family family_from_string(const std::string& s) {
    if (s == "uniform") return Family::Uniform;
    if (s == "linear_tilt" || s == "tilt") return Family::LinearTilt;
    if (s == "trunc_normal" || s == "truncated_normal") return Family::TruncNormal;
    throw std::invalid_argument("unsupported family: " + s);
}

}  // namespace qv
