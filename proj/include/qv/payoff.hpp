#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qv/interp.hpp"
#include "qv/quadrature.hpp"

namespace qv {

/// Smoothed payoff function Psi with derivative psi supported on (-delta, delta).
/// Psi is odd, equals sign(x) for |x| >= delta, and psi has a single
/// inflection point on each side. Immutable after construction.
struct PayoffFunction {
    double delta = 0.0;
    std::function<double(double)> Psi;
    std::function<double(double)> psi;
    std::function<double(double)> psi_prime;
    double psi_inf = 0.0;        // sup |psi|
    double psi_prime_inf = 0.0;  // sup |psi'|
};

enum class PayoffOrder { Psi, psi, psi_prime };

inline double eval(const PayoffFunction& p, double x, PayoffOrder order) {
    if (!std::isfinite(x)) throw std::invalid_argument("payoff eval: non-finite x");
    switch (order) {
        case PayoffOrder::Psi:
            return p.Psi(x);
        case PayoffOrder::psi:
            return p.psi(x);
        case PayoffOrder::psi_prime:
            return p.psi_prime(x);
    }
    return 0.0;
}

struct AxiomCheck {
    std::string name;
    bool pass = false;
    double worst = 0.0;  // worst-case violation magnitude (0 when clean)
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;
    double psi_inf = 0.0;
    double psi_prime_inf = 0.0;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Grid verification of the payoff axioms. Failures are reported, not thrown.
inline AxiomReport verify_axioms(const PayoffFunction& p) {
    AxiomReport rep;
    const double d = p.delta;
    auto push = [&rep](const std::string& name, bool pass, double worst) {
        rep.checks.push_back({name, pass, worst});
    };

    if (!(d > 0.0)) {
        push("delta_positive", false, d);
        return rep;
    }
    push("delta_positive", true, 0.0);

    // Psi = sign(x) outside [-delta, delta]
    {
        double worst = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double x = d + (3.0 * d) * i / 2000.0;
            worst = std::max(worst, std::abs(p.Psi(x) - 1.0));
            worst = std::max(worst, std::abs(p.Psi(-x) + 1.0));
        }
        push("sign_outside_delta", worst < 1e-12, worst);
    }
    // oddness
    {
        double worst = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            const double x = -2.0 * d + 4.0 * d * i / 4000.0;
            worst = std::max(worst, std::abs(p.Psi(x) + p.Psi(-x)));
        }
        push("odd", worst < 1e-12, worst);
    }
    // psi > 0 inside, psi = 0 outside. The grid stays a hair inside the
    // support edge: the bump's exp(-1/(1-t^2)) underflows to an exact double
    // zero in the outer ~5e-4 sliver, which is a representation limit, not
    // an axiom violation.
    {
        const double inner = d * (1.0 - 1e-3);
        double worst = 0.0;
        bool pos = true;
        for (int i = 0; i <= 4000; ++i) {
            const double x = -inner + 2.0 * inner * i / 4000.0;
            if (!(p.psi(x) > 0.0)) {
                pos = false;
                worst = std::min(worst, p.psi(x));
            }
        }
        push("psi_positive_inside", pos, std::abs(worst));
        double out = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double x = d + 2.0 * d * i / 1000.0;
            out = std::max({out, std::abs(p.psi(x)), std::abs(p.psi(-x)),
                            std::abs(p.psi_prime(x)), std::abs(p.psi_prime(-x))});
        }
        push("psi_zero_outside", out == 0.0, out);
    }
    // integral of psi equals Psi(delta) - Psi(-delta) = 2
    {
        double mass = 0.0;
        bool ok = true;
        try {
            mass = integrate_adaptive(p.psi, -d, d, 1e-12, 1e-12);
        } catch (const std::exception&) {
            ok = false;
        }
        const double err = std::abs(mass - 2.0);
        push("psi_integral_2", ok && err < 1e-10, err);
    }
    // psi' > 0 on (-delta, 0), same representable-interior grid
    {
        bool pos = true;
        double worst = 0.0;
        const double inner = d * (1.0 - 1e-3);
        for (int i = 0; i < 4000; ++i) {
            const double x = -inner + (inner - d * 1e-4) * i / 4000.0;
            if (!(p.psi_prime(x) > 0.0)) {
                pos = false;
                worst = std::min(worst, p.psi_prime(x));
            }
        }
        push("psi_prime_positive_left", pos, std::abs(worst));
    }
    // single inflection of psi on (-delta, 0): one sign change of psi''
    {
        const int n = 10000;
        int changes = 0;
        double prev = 0.0;
        bool have_prev = false;
        for (int i = 2; i < n - 1; ++i) {
            const double x = -d + d * i / n;
            const double h = d / n;
            const double dd = (p.psi_prime(x + h) - p.psi_prime(x - h)) / (2.0 * h);
            if (std::abs(dd) < 1e-10) continue;
            if (have_prev && prev * dd < 0.0) ++changes;
            prev = dd;
            have_prev = true;
        }
        push("single_inflection", changes == 1, static_cast<double>(changes));
    }
    double pinf = 0.0, ppinf = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double x = -d + 2.0 * d * i / 20000.0;
        pinf = std::max(pinf, std::abs(p.psi(x)));
        ppinf = std::max(ppinf, std::abs(p.psi_prime(x)));
    }
    rep.psi_inf = pinf;
    rep.psi_prime_inf = ppinf;

    // finite-difference consistency Psi' ~ psi and psi' ~ psi_prime at
    // h = 1e-5. The second stage carries an h^2 psi''' / 6 truncation floor
    // that grows like delta^-4, so its budget scales with ||psi'||_inf.
    {
        const double h = 1e-5;
        double worst1 = 0.0, worst2 = 0.0;
        for (int i = 1; i < 1000; ++i) {
            const double x = -d + 2.0 * d * i / 1000.0;
            worst1 = std::max(worst1,
                              std::abs((p.Psi(x + h) - p.Psi(x - h)) / (2 * h) - p.psi(x)));
            worst2 = std::max(
                worst2, std::abs((p.psi(x + h) - p.psi(x - h)) / (2 * h) - p.psi_prime(x)));
        }
        push("fd_Psi_psi", worst1 < 1e-6, worst1);
        push("fd_psi_psi_prime", worst2 < 1e-6 * std::max(1.0, ppinf), worst2);
    }
    return rep;
}

/// Mollifier-bump payoff: psi(x) = c * exp(-1 / (1 - (x/delta)^2)) on
/// (-delta, delta), c fixed by the requirement that psi integrate to 2.
/// Psi is served from a cumulative table with monotone spline interpolation,
/// odd-symmetrized so Psi(0) = 0 and Psi(+-delta) = +-1 hold exactly.
inline PayoffFunction make_bump_payoff(double delta, int table_size = 1 << 14) {
    if (!(delta > 0.0)) throw std::invalid_argument("make_bump_payoff: delta must be > 0");
    if (table_size < 64) throw std::invalid_argument("make_bump_payoff: table too small");

    auto bump = [](double t) {
        const double g = 1.0 - t * t;
        return g > 0.0 ? std::exp(-1.0 / g) : 0.0;
    };
    const double bump_mass = integrate_adaptive(bump, -1.0, 1.0, 1e-15, 1e-14);
    const double c = 2.0 / (delta * bump_mass);

    auto psi = [c, delta, bump](double x) { return c * bump(x / delta); };
    auto psi_prime = [c, delta](double x) {
        const double t = x / delta;
        const double g = 1.0 - t * t;
        if (g <= 0.0) return 0.0;
        return c * std::exp(-1.0 / g) * (-2.0 * t / (g * g)) / delta;
    };

    // cumulative over [0, delta], normalized so the table hits 1 exactly
    const int half = table_size / 2;
    std::vector<double> xs(half + 1), cum(half + 1);
    KahanSum acc;
    xs[0] = 0.0;
    cum[0] = 0.0;
    const double h = delta / half;
    for (int i = 1; i <= half; ++i) {
        acc.add(integrate_composite(psi, (i - 1) * h, i * h, 4));
        xs[i] = i * h;
        cum[i] = acc.value();
    }
    const double total = cum.back();
    for (auto& v : cum) v /= total;
    cum.back() = 1.0;
    MonotoneCubic right(std::move(xs), std::move(cum));

    PayoffFunction p;
    p.delta = delta;
    p.psi = psi;
    p.psi_prime = psi_prime;
    p.Psi = [right = std::move(right), delta](double x) {
        const double ax = std::abs(x);
        if (ax >= delta) return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        const double v = right(ax);
        return x >= 0.0 ? v : -v;
    };

    AxiomReport rep = verify_axioms(p);
    if (!rep.all_pass()) {
        std::string msg = "make_bump_payoff: axiom verification failed:";
        for (const auto& chk : rep.checks)
            if (!chk.pass) msg += " " + chk.name;
        throw std::runtime_error(msg);
    }
    p.psi_inf = rep.psi_inf;
    p.psi_prime_inf = rep.psi_prime_inf;
    return p;
}

}  // namespace qv
