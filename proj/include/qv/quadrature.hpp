#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace qv {

namespace detail {

// Gauss-Kronrod 7-15 pair on [-1, 1].
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

// weights of the embedded 7-point Gauss rule (nodes 1, 3, 5, 7 above)
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = kKronrodWeights[7] * fc;
    double resg = kGaussWeights[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * kKronrodNodes[j];
        const double fsum = f(c - x) + f(c + x);
        resk += kKronrodWeights[j] * fsum;
        if (j % 2 == 1) resg += kGaussWeights[j / 2] * fsum;
    }
    kronrod = resk * h;
    err = std::abs((resk - resg) * h);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b].
/// Bisects the worst interval until the summed error estimate meets
/// abs_tol or rel_tol. Throws on non-finite integrand values.
template <class F>
inline double integrate_adaptive(const F& f, double a, double b,
                                 double abs_tol = 1e-12, double rel_tol = 1e-10,
                                 int max_intervals = 4096) {
    struct Seg {
        double a, b, val, err;
    };
    auto eval = [&](double x) {
        const double y = f(x);
        if (!std::isfinite(y)) throw std::runtime_error("integrate: non-finite integrand");
        return y;
    };
    std::vector<Seg> segs;
    {
        double v, e;
        detail::gk15(eval, a, b, v, e);
        segs.push_back({a, b, v, e});
    }
    while (static_cast<int>(segs.size()) < max_intervals) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].val;
            err += segs[i].err;
            if (segs[i].err > segs[worst].err) worst = i;
        }
        if (err <= abs_tol || err <= rel_tol * std::abs(total)) return total;
        Seg s = segs[worst];
        const double m = 0.5 * (s.a + s.b);
        Seg left, right;
        left.a = s.a;
        left.b = m;
        right.a = m;
        right.b = s.b;
        detail::gk15(eval, left.a, left.b, left.val, left.err);
        detail::gk15(eval, right.a, right.b, right.val, right.err);
        segs[worst] = left;
        segs.push_back(right);
    }
    double total = 0.0;
    for (const Seg& s : segs) total += s.val;
    return total;
}

/// Fixed-order composite Gauss-Legendre(4) over `cells` uniform cells.
/// Used where the integrand is smooth per cell and speed matters.
template <class F>
inline double integrate_composite(const F& f, double a, double b, int cells) {
    static constexpr double xg[2] = {0.339981043584856264802665759103245,
                                     0.861136311594052575223946488892809};
    static constexpr double wg[2] = {0.652145154862546142626936050778001,
                                     0.347854845137453857373063949221999};
    const double h = (b - a) / cells;
    double total = 0.0;
    for (int i = 0; i < cells; ++i) {
        const double c = a + (i + 0.5) * h;
        const double r = 0.5 * h;
        for (int j = 0; j < 2; ++j) {
            total += wg[j] * (f(c - r * xg[j]) + f(c + r * xg[j]));
        }
    }
    return total * 0.5 * h;
}

/// Kahan-compensated accumulator.
class KahanSum {
  public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

}  // namespace qv
