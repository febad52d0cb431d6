#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qv {

/// In-place iterative radix-2 FFT. n must be a power of two.
/// sign = -1 forward, +1 inverse (inverse is unscaled; caller divides by n).
inline void fft_radix2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: size not a power of 2");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// Forward transform of a real vector.
inline std::vector<std::complex<double>> fft_forward_real(const std::vector<double>& x) {
    std::vector<std::complex<double>> a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
    fft_radix2(a, -1);
    return a;
}

/// Inverse transform, returning the real part scaled by 1/n.
inline std::vector<double> fft_inverse_real(std::vector<std::complex<double>> a) {
    fft_radix2(a, +1);
    std::vector<double> out(a.size());
    const double inv = 1.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i].real() * inv;
    return out;
}

/// z^n for integer n through the polar form; exact for integer powers and
/// robust when |z|^n underflows.
inline std::complex<double> cf_pow(std::complex<double> z, long n) {
    const double r = std::abs(z);
    if (r == 0.0) return {0.0, 0.0};
    const double th = std::arg(z);
    const double rn = std::exp(static_cast<double>(n) * std::log(r));
    const double a = static_cast<double>(n) * th;
    return {rn * std::cos(a), rn * std::sin(a)};
}

/// n-fold self-convolution of a probability mass vector in wrap-at-zero
/// index convention (cell k holds coordinate k*h for k < n/2, (k-n)*h above).
/// Small negative ripple from roundoff is clipped.
inline std::vector<double> self_convolve_power(const std::vector<double>& pmf, long n) {
    auto ft = fft_forward_real(pmf);
    for (auto& z : ft) z = cf_pow(z, n);
    auto out = fft_inverse_real(std::move(ft));
    for (double& v : out)
        if (v < 0.0) v = 0.0;
    return out;
}

/// Circular cross-correlation table: out[k] = sum_j pdf[j] * kernel[j + k],
/// with pdf zero-padded to kernel.size() (kernel.size() = 2 * pdf.size()).
inline std::vector<double> correlate_table(const std::vector<double>& pdf,
                                           const std::vector<double>& kernel) {
    const std::size_t g = pdf.size();
    if (kernel.size() != 2 * g) throw std::invalid_argument("correlate: kernel must be 2x pdf");
    std::vector<std::complex<double>> fp(2 * g), fk(2 * g);
    for (std::size_t i = 0; i < g; ++i) fp[i] = pdf[i];
    for (std::size_t i = 0; i < 2 * g; ++i) fk[i] = kernel[i];
    fft_radix2(fp, -1);
    fft_radix2(fk, -1);
    for (std::size_t i = 0; i < 2 * g; ++i) fp[i] = std::conj(fp[i]) * fk[i];
    fft_radix2(fp, +1);
    std::vector<double> out(g);
    const double inv = 1.0 / static_cast<double>(2 * g);
    for (std::size_t i = 0; i < g; ++i) out[i] = fp[i].real() * inv;
    return out;
}

}  // namespace qv
