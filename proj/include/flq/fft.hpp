#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace flq {

// Iterative radix-2 FFT, in place. n must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * 3.14159265358979323846 / (double)len;
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= (double)n;
    }
}

// Circular convolution of two real vectors of equal power-of-two length.
inline std::vector<double> fft_convolve_circular(const std::vector<double>& x,
                                                 const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> fx(n), fy(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = x[i];
    for (std::size_t i = 0; i < n; ++i) fy[i] = y[i];
    fft_inplace(fx, false);
    fft_inplace(fy, false);
    for (std::size_t i = 0; i < n; ++i) fx[i] *= fy[i];
    fft_inplace(fx, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fx[i].real();
    return out;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace flq
