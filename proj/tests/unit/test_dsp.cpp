#include <catch2/catch_amalgamated.hpp>

#include "duplex/dsp.hpp"
#include "duplex/rng.hpp"

using namespace duplex;

namespace {

Waveform make_sine(double freq, int sr, double seconds, double amp = 0.5) {
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(static_cast<size_t>(seconds * sr));
    for (size_t i = 0; i < w.samples.size(); i++) w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / sr);
    return w;
}

// Energy around a frequency estimated from a large rectangular FFT.
double band_energy(const Waveform& w, double f_lo, double f_hi) {
    const size_t n = next_pow2(w.samples.size());
    std::vector<cplx> buf(n);
    for (size_t i = 0; i < w.samples.size(); i++) buf[i] = w.samples[i];
    fft(buf);
    double acc = 0.0;
    for (size_t k = 0; k <= n / 2; k++) {
        const double f = static_cast<double>(k) * w.sample_rate / static_cast<double>(n);
        if (f >= f_lo && f <= f_hi) acc += std::norm(buf[k]);
    }
    return acc;
}

double peak_freq(const Waveform& w) {
    const size_t n = next_pow2(w.samples.size());
    std::vector<cplx> buf(n);
    for (size_t i = 0; i < w.samples.size(); i++) buf[i] = w.samples[i];
    fft(buf);
    size_t best = 0;
    double best_mag = -1.0;
    for (size_t k = 0; k <= n / 2; k++) {
        if (std::abs(buf[k]) > best_mag) {
            best_mag = std::abs(buf[k]);
            best = k;
        }
    }
    return static_cast<double>(best) * w.sample_rate / static_cast<double>(n);
}

}  // namespace

TEST_CASE("resample at the same rate is bit-identical") {
    auto w = make_sine(440, 24000, 0.25);
    auto r = resample(w, 24000);
    REQUIRE(r.samples == w.samples);
}

TEST_CASE("resample preserves a sine's spectral peak") {
    auto w = make_sine(1000, 48000, 0.5);
    auto r = resample(w, 24000);
    REQUIRE(r.sample_rate == 24000);
    REQUIRE(std::fabs(static_cast<double>(r.samples.size()) / 24000.0 - 0.5) <= 1.0 / 24000.0);
    const double pf = peak_freq(r);
    const double bin = 24000.0 / static_cast<double>(next_pow2(r.samples.size()));
    REQUIRE(std::fabs(pf - 1000.0) <= bin + 1e-9);
}

TEST_CASE("downsampling removes content above the intermediate Nyquist") {
    auto w = make_sine(10000, 48000, 0.5);
    auto down = resample(w, 8000);
    auto back = resample(down, 48000);
    const double before = band_energy(w, 4000, 24000);
    const double after = band_energy(back, 4000, 24000);
    REQUIRE(after < before * 1e-4);  // > 40 dB attenuation
}

TEST_CASE("round trip 24k -> 48k -> 24k keeps band-limited content above 40 dB SNR") {
    // Multitone strictly below 10 kHz.
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(24000, 0.0);
    for (double f : {300.0, 1100.0, 2700.0, 5200.0, 8100.0, 9300.0})
        for (size_t i = 0; i < w.samples.size(); i++)
            w.samples[i] += 0.12 * std::sin(2.0 * M_PI * f * static_cast<double>(i) / 24000.0);

    auto up = resample(w, 48000);
    auto back = resample(up, 24000);
    back.samples.resize(w.samples.size(), 0.0);

    // Skip filter edges when measuring.
    double sig = 0, err = 0;
    for (size_t i = 200; i + 200 < w.samples.size(); i++) {
        sig += w.samples[i] * w.samples[i];
        const double d = back.samples[i] - w.samples[i];
        err += d * d;
    }
    REQUIRE(10.0 * std::log10(sig / err) > 40.0);
}

TEST_CASE("resample rejects bad rates") {
    auto w = make_sine(440, 24000, 0.1);
    REQUIRE_THROWS_AS(resample(w, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(resample(w, -8000), std::invalid_argument);
}

TEST_CASE("stft of zero signal is all zeros") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(2048, 0.0);
    auto m = stft_magnitude(w, 512, 128);
    for (const auto& row : m)
        for (double v : row) REQUIRE(v == 0.0);
}

TEST_CASE("stft of a bin-centered sine concentrates in one bin") {
    const int fft_size = 512, sr = 24000;
    const double f = 16.0 * sr / fft_size;  // exactly bin 16
    auto w = make_sine(f, sr, 0.2);
    auto m = stft_magnitude(w, fft_size, 256);
    for (const auto& row : m) {
        size_t best = 0;
        for (size_t k = 0; k < row.size(); k++)
            if (row[k] > row[best]) best = k;
        REQUIRE(best == 16);
        double rest = 0.0;
        for (size_t k = 0; k < row.size(); k++)
            if (k < 15 || k > 17) rest = std::max(rest, row[k]);
        REQUIRE(rest < 0.01 * row[best]);
    }
}

TEST_CASE("stft satisfies Parseval per frame") {
    CounterRng rng(5);
    Waveform w;
    w.sample_rate = 24000;
    w.samples.resize(1024);
    for (auto& s : w.samples) s = rng.gaussian() * 0.2;
    const int fft_size = 256, hop = 128;
    auto m = stft_magnitude(w, fft_size, hop);
    auto win = hann_window(fft_size);
    for (size_t fidx = 0; fidx < m.size(); fidx++) {
        double windowed_energy = 0.0;
        for (int i = 0; i < fft_size; i++) {
            const double v = w.samples[fidx * hop + static_cast<size_t>(i)] * win[static_cast<size_t>(i)];
            windowed_energy += v * v;
        }
        // Full-spectrum energy from the one-sided magnitudes.
        double spec = m[fidx][0] * m[fidx][0] + m[fidx][fft_size / 2] * m[fidx][fft_size / 2];
        for (int k = 1; k < fft_size / 2; k++) spec += 2.0 * m[fidx][static_cast<size_t>(k)] * m[fidx][static_cast<size_t>(k)];
        REQUIRE(spec == Catch::Approx(windowed_energy * fft_size).epsilon(1e-6));
    }
}

TEST_CASE("stft rejects short waves") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(100, 0.1);
    REQUIRE_THROWS_AS(stft_magnitude(w, 256, 128), std::invalid_argument);
}

TEST_CASE("energy vad on silence is all inactive") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(24000, 0.0);
    auto labels = energy_vad(w);
    REQUIRE(labels.frames.size() == 50);
    for (auto f : labels.frames) REQUIRE(f == 0);
}

TEST_CASE("energy vad on a constant tone is all active") {
    auto w = make_sine(440, 24000, 1.0);
    auto labels = energy_vad(w);
    for (auto f : labels.frames) REQUIRE(f == 1);
}

TEST_CASE("energy vad splits tone plus silence at -30 dB") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(48000, 0.0);
    for (size_t i = 0; i < 24000; i++) w.samples[i] = 0.5 * std::sin(2.0 * M_PI * 440.0 * i / 24000.0);
    auto labels = energy_vad(w, 0.02, -30.0);
    REQUIRE(labels.frames.size() == 100);
    for (size_t i = 0; i < 50; i++) REQUIRE(labels.frames[i] == 1);
    for (size_t i = 50; i < 100; i++) REQUIRE(labels.frames[i] == 0);
}

TEST_CASE("energy vad is invariant to global gain") {
    CounterRng rng(9);
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(24000, 0.0);
    for (size_t i = 0; i < w.samples.size(); i++)
        w.samples[i] = (i / 4800) % 2 == 0 ? 0.4 * std::sin(2.0 * M_PI * 300.0 * i / 24000.0) : 0.001 * rng.gaussian();
    auto base = energy_vad(w);
    for (double g : {0.03, 0.5, 7.0}) {
        Waveform scaled = w;
        for (auto& s : scaled.samples) s *= g;
        auto labels = energy_vad(scaled);
        REQUIRE(labels.frames == base.frames);
    }
}

TEST_CASE("energy vad frame count is ceil(duration / hop)") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(24001, 0.1);  // slightly over 1 s
    auto labels = energy_vad(w, 0.02);
    REQUIRE(labels.frames.size() == 51);
}

TEST_CASE("energy vad rejects empty input") {
    Waveform w;
    w.sample_rate = 24000;
    REQUIRE_THROWS_AS(energy_vad(w), std::invalid_argument);
}
