#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace duplex {

using cplx = std::complex<double>;

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 FFT. inverse=true applies the 1/n factor.
inline void fft(std::vector<cplx>& a, bool inverse = false) {
    const size_t n = a.size();
    if (n == 0) return;
    if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");

    for (size_t i = 1, j = 0; i < n; i++) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    // Twiddles from std::polar per index keep rounding error flat across
    // large transforms (no accumulated rotation drift).
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const size_t half = len >> 1;
        std::vector<cplx> w(half);
        for (size_t k = 0; k < half; k++) w[k] = std::polar(1.0, ang * static_cast<double>(k));
        for (size_t i = 0; i < n; i += len) {
            for (size_t k = 0; k < half; k++) {
                cplx u = a[i + k];
                cplx v = a[i + k + half] * w[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

// Linear convolution of two real signals via zero-padded FFT.
inline std::vector<double> fft_convolve(const std::vector<double>& x, const std::vector<double>& h) {
    if (x.empty() || h.empty()) return {};
    const size_t out_len = x.size() + h.size() - 1;
    const size_t n = next_pow2(out_len);
    std::vector<cplx> a(n), b(n);
    for (size_t i = 0; i < x.size(); i++) a[i] = x[i];
    for (size_t i = 0; i < h.size(); i++) b[i] = h[i];
    fft(a);
    fft(b);
    for (size_t i = 0; i < n; i++) a[i] *= b[i];
    fft(a, true);
    std::vector<double> out(out_len);
    for (size_t i = 0; i < out_len; i++) out[i] = a[i].real();
    return out;
}

// Direct linear convolution; exact, O(n*m). Used when one side is short.
inline std::vector<double> direct_convolve(const std::vector<double>& x, const std::vector<double>& h) {
    if (x.empty() || h.empty()) return {};
    std::vector<double> out(x.size() + h.size() - 1, 0.0);
    for (size_t i = 0; i < x.size(); i++) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (size_t j = 0; j < h.size(); j++) out[i + j] += xi * h[j];
    }
    return out;
}

inline std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h) {
    if (std::min(x.size(), h.size()) <= 256) return direct_convolve(x, h);
    return fft_convolve(x, h);
}

}  // namespace duplex
