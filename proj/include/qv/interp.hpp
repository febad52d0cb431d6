#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qv {

/// Linear interpolation on a sorted abscissa array; clamps outside the range.
inline double linear_interp(const std::vector<double>& xs, const std::vector<double>& ys,
                            double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return ys[i] + t * (ys[i + 1] - ys[i]);
}

/// Monotone cubic (Fritsch-Carlson) interpolant on a strictly increasing grid.
/// Preserves monotonicity of the data; C1.
class MonotoneCubic {
  public:
    MonotoneCubic() = default;

    MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        if (n < 2 || ys_.size() != n) throw std::invalid_argument("MonotoneCubic: bad sizes");
        // uniform abscissae allow direct cell indexing
        const double h0 = xs_[1] - xs_[0];
        uniform_ = true;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs((xs_[i + 1] - xs_[i]) - h0) > 1e-9 * std::max(std::abs(h0), 1e-300)) {
                uniform_ = false;
                break;
            }
        }
        inv_h_ = uniform_ ? 1.0 / h0 : 0.0;
        ms_.resize(n);
        std::vector<double> d(n - 1), h(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = xs_[i + 1] - xs_[i];
            if (h[i] <= 0.0) throw std::invalid_argument("MonotoneCubic: grid not increasing");
            d[i] = (ys_[i + 1] - ys_[i]) / h[i];
        }
        ms_[0] = d[0];
        ms_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
                ms_[i] = 0.0;
            } else {
                const double w1 = 2.0 * h[i] + h[i - 1];
                const double w2 = h[i] + 2.0 * h[i - 1];
                ms_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        // clamp endpoint slopes to keep monotone shape
        for (std::size_t i : {std::size_t{0}, n - 1}) {
            const double dd = (i == 0) ? d[0] : d[n - 2];
            if (ms_[i] * dd <= 0.0)
                ms_[i] = 0.0;
            else if (std::abs(ms_[i]) > 3.0 * std::abs(dd))
                ms_[i] = 3.0 * dd;
        }
    }

    double operator()(double x) const {
        if (x <= xs_.front()) return ys_.front();
        if (x >= xs_.back()) return ys_.back();
        std::size_t i;
        if (uniform_) {
            i = static_cast<std::size_t>((x - xs_.front()) * inv_h_);
            if (i + 1 >= xs_.size()) i = xs_.size() - 2;
        } else {
            const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        }
        const double h = xs_[i + 1] - xs_[i];
        const double t = (x - xs_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * ys_[i] + h10 * h * ms_[i] + h01 * ys_[i + 1] + h11 * h * ms_[i + 1];
    }

    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }

  private:
    std::vector<double> xs_, ys_, ms_;
    bool uniform_ = false;
    double inv_h_ = 0.0;
};

/// Isotonic (nondecreasing) least-squares projection, pool-adjacent-violators.
inline std::vector<double> isotonic_projection(const std::vector<double>& vals) {
    const std::size_t n = vals.size();
    std::vector<double> level;
    std::vector<double> weight;
    std::vector<std::size_t> count;
    level.reserve(n);
    weight.reserve(n);
    count.reserve(n);
    for (double v : vals) {
        level.push_back(v);
        weight.push_back(1.0);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const double w = weight[weight.size() - 2] + weight.back();
            const double merged =
                (level[level.size() - 2] * weight[weight.size() - 2] + level.back() * weight.back()) / w;
            level.pop_back();
            weight.pop_back();
            const std::size_t c = count.back();
            count.pop_back();
            level.back() = merged;
            weight.back() = w;
            count.back() += c;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < level.size(); ++b)
        for (std::size_t k = 0; k < count[b]; ++k) out.push_back(level[b]);
    return out;
}

}  // namespace qv
