#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "duplex/fft.hpp"
#include "duplex/wav.hpp"

namespace duplex {

struct ActivityLabels {
    std::vector<uint8_t> frames;  // 1 = voice active
    double frame_hop = 0.02;
};

inline double bessel_i0(double x) {
    // Series expansion; converges fast for the beta range used here.
    double sum = 1.0, term = 1.0;
    const double hx = 0.5 * x;
    for (int k = 1; k < 64; k++) {
        term *= (hx / k) * (hx / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

inline double kaiser(double n, double N, double beta) {
    const double r = 2.0 * n / (N - 1.0) - 1.0;  // [-1, 1]
    if (std::fabs(r) > 1.0) return 0.0;
    return bessel_i0(beta * std::sqrt(1.0 - r * r)) / bessel_i0(beta);
}

inline std::vector<double> hann_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; i++) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
    return w;
}

inline double sinc(double x) {
    if (std::fabs(x) < 1e-12) return 1.0;
    return std::sin(M_PI * x) / (M_PI * x);
}

namespace detail {

// Polyphase windowed-sinc prototype: p phases x taps_per_phase taps at the
// virtual rate fs_in * p, Kaiser window, cutoff at min(fs_in, fs_out)/2.
// Each phase is normalized to unit DC gain.
struct PolyphaseFilter {
    int p = 1, q = 1, taps = 64, half = 32;
    std::vector<std::vector<double>> phase;  // [p][taps]

    PolyphaseFilter(int fs_in, int fs_out, int taps_per_phase = 64, double beta = 8.6) {
        const int g = std::gcd(fs_in, fs_out);
        p = fs_out / g;
        q = fs_in / g;
        taps = taps_per_phase;
        half = taps / 2;
        const double virtual_rate = static_cast<double>(fs_in) * p;
        const double cutoff = 0.5 * std::min(fs_in, fs_out);
        const int n_total = taps * p;
        const double center = 0.5 * (n_total - 1.0);
        std::vector<double> proto(n_total);
        for (int n = 0; n < n_total; n++) {
            const double t = (n - center) / virtual_rate;
            proto[n] = kaiser(n, n_total, beta) * 2.0 * cutoff / virtual_rate * sinc(2.0 * cutoff * t);
        }
        phase.assign(p, std::vector<double>(taps, 0.0));
        for (int ph = 0; ph < p; ph++) {
            double s = 0.0;
            for (int j = 0; j < taps; j++) {
                phase[ph][j] = proto[ph + j * p];
                s += phase[ph][j];
            }
            if (s != 0.0)
                for (int j = 0; j < taps; j++) phase[ph][j] /= s;
        }
    }
};

}  // namespace detail

// Band-limited rational resampling (Kaiser beta 8.6, 64 taps per phase).
// Same-rate input is returned bit-identical.
inline Waveform resample(const Waveform& w, int target_sr) {
    if (target_sr <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (target_sr == w.sample_rate) return w;

    detail::PolyphaseFilter f(w.sample_rate, target_sr);
    const int64_t in_len = static_cast<int64_t>(w.samples.size());
    const int64_t out_len = (in_len * f.p + f.q - 1) / f.q;

    Waveform out;
    out.sample_rate = target_sr;
    out.samples.assign(static_cast<size_t>(std::max<int64_t>(out_len, 0)), 0.0);
    for (int64_t m = 0; m < out_len; m++) {
        const int64_t num = m * f.q;
        const int64_t n0 = num / f.p;
        const int ph = static_cast<int>(num % f.p);
        const auto& h = f.phase[ph];
        double acc = 0.0;
        for (int j = 0; j < f.taps; j++) {
            const int64_t idx = n0 - j + f.half;
            if (idx >= 0 && idx < in_len) acc += h[j] * w.samples[static_cast<size_t>(idx)];
        }
        out.samples[static_cast<size_t>(m)] = acc;
    }
    return out;
}

// frames x (fft_size/2 + 1) Hann-windowed magnitudes; no padding, so the
// wave must cover at least one full frame.
inline std::vector<std::vector<double>> stft_magnitude(const Waveform& w, int fft_size, int hop) {
    if (!is_pow2(static_cast<size_t>(fft_size))) throw std::invalid_argument("stft: fft_size must be a power of two");
    if (hop <= 0 || hop > fft_size) throw std::invalid_argument("stft: need 0 < hop <= fft_size");
    const int64_t n = static_cast<int64_t>(w.samples.size());
    if (n < fft_size) throw std::invalid_argument("stft: wave shorter than one frame");

    const int64_t n_frames = 1 + (n - fft_size) / hop;
    const int bins = fft_size / 2 + 1;
    const auto win = hann_window(fft_size);
    std::vector<std::vector<double>> mag(static_cast<size_t>(n_frames), std::vector<double>(bins));
    std::vector<cplx> buf(static_cast<size_t>(fft_size));
    for (int64_t fidx = 0; fidx < n_frames; fidx++) {
        const int64_t off = fidx * hop;
        for (int i = 0; i < fft_size; i++) buf[i] = w.samples[static_cast<size_t>(off + i)] * win[i];
        fft(buf);
        for (int k = 0; k < bins; k++) mag[static_cast<size_t>(fidx)][k] = std::abs(buf[k]);
    }
    return mag;
}

// Frame active iff its RMS is within threshold_db (negative) of the peak
// frame RMS. Relative thresholding makes labels gain-invariant; an absolute
// floor keeps digital silence inactive.
inline ActivityLabels energy_vad(const Waveform& w, double frame_hop = 0.02, double threshold_db = -35.0) {
    if (frame_hop <= 0) throw std::invalid_argument("energy_vad: frame_hop must be positive");
    if (w.samples.empty()) throw std::invalid_argument("energy_vad: empty wave");
    const int64_t hop = std::max<int64_t>(1, std::llround(frame_hop * w.sample_rate));
    const int64_t n = static_cast<int64_t>(w.samples.size());
    const int64_t n_frames = (n + hop - 1) / hop;

    std::vector<double> rms(static_cast<size_t>(n_frames));
    double peak = 0.0;
    for (int64_t i = 0; i < n_frames; i++) {
        const int64_t a = i * hop, b = std::min(n, a + hop);
        double acc = 0.0;
        for (int64_t j = a; j < b; j++) acc += w.samples[static_cast<size_t>(j)] * w.samples[static_cast<size_t>(j)];
        rms[static_cast<size_t>(i)] = std::sqrt(acc / static_cast<double>(b - a));
        peak = std::max(peak, rms[static_cast<size_t>(i)]);
    }

    ActivityLabels labels;
    labels.frame_hop = frame_hop;
    labels.frames.resize(static_cast<size_t>(n_frames));
    const double gate = peak * std::pow(10.0, threshold_db / 20.0);
    for (int64_t i = 0; i < n_frames; i++) {
        const double r = rms[static_cast<size_t>(i)];
        labels.frames[static_cast<size_t>(i)] = (r > 1e-8 && r >= gate) ? 1 : 0;
    }
    return labels;
}

}  // namespace duplex
