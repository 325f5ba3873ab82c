#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "duplex/dsp.hpp"
#include "duplex/fft.hpp"
#include "duplex/rng.hpp"
#include "duplex/wav.hpp"

namespace duplex {

struct DegradationConfig {
    double per_step_probability = 0.5;
    double rt60_min = 0.1, rt60_max = 1.0;               // seconds
    double room_dim_min = 2.0, room_dim_max = 20.0;      // meters
    double snr_min = -5.0, snr_max = 20.0;               // dB
    std::vector<int> resample_choices = {8000, 16000, 22050, 24000, 44100, 48000};
    double clip_lo_min = 0.0, clip_lo_max = 0.10;
    double clip_hi_min = 0.90, clip_hi_max = 1.00;
    double bitrate_min = 65.0, bitrate_max = 245.0;      // kbps
    double packet_loss_fraction = 0.09;
    double packet_dur_min_ms = 20.0, packet_dur_max_ms = 200.0;
    double mix_w_min = 0.3, mix_w_max = 0.7;

    void validate() const {
        auto ordered = [](double a, double b) { return a <= b; };
        if (per_step_probability < 0 || per_step_probability > 1)
            throw std::invalid_argument("degrade: per_step_probability out of [0,1]");
        if (!ordered(rt60_min, rt60_max) || rt60_min <= 0) throw std::invalid_argument("degrade: bad rt60 range");
        if (!ordered(room_dim_min, room_dim_max) || room_dim_min <= 0)
            throw std::invalid_argument("degrade: bad room dim range");
        if (!ordered(snr_min, snr_max)) throw std::invalid_argument("degrade: bad snr range");
        if (resample_choices.empty()) throw std::invalid_argument("degrade: empty resample choices");
        if (!(0 <= clip_lo_min && clip_lo_min <= clip_lo_max && clip_lo_max < clip_hi_min &&
              clip_hi_min <= clip_hi_max && clip_hi_max <= 1.0))
            throw std::invalid_argument("degrade: bad clip quantile ranges");
        if (!ordered(bitrate_min, bitrate_max)) throw std::invalid_argument("degrade: bad bitrate range");
        if (packet_loss_fraction < 0 || packet_loss_fraction >= 1)
            throw std::invalid_argument("degrade: bad packet loss fraction");
        if (!ordered(packet_dur_min_ms, packet_dur_max_ms) || packet_dur_min_ms <= 0)
            throw std::invalid_argument("degrade: bad packet duration range");
        if (!(0 <= mix_w_min && mix_w_min <= mix_w_max && mix_w_max <= 1.0))
            throw std::invalid_argument("degrade: bad mix weight range");
    }
};

struct RoomSpec {
    std::array<double, 3> dims{};      // meters
    double rt60 = 0.3;                 // seconds
    double absorption = 0.3;           // Sabine energy absorption, (0, 1]
    int max_order = 10;
    std::array<double, 3> source_pos{};
    std::array<double, 3> mic_pos{};

    void validate() const {
        for (int i = 0; i < 3; i++) {
            if (dims[i] <= 0) throw std::invalid_argument("room: dims must be positive");
            if (source_pos[i] <= 0 || source_pos[i] >= dims[i] || mic_pos[i] <= 0 || mic_pos[i] >= dims[i])
                throw std::invalid_argument("room: positions must be strictly inside the room");
        }
        if (rt60 <= 0) throw std::invalid_argument("room: rt60 must be positive");
        if (absorption <= 0 || absorption > 1) throw std::invalid_argument("room: absorption out of (0,1]");
        if (max_order < 0) throw std::invalid_argument("room: max_order must be >= 0");
    }
};

struct DialogueSession {
    Waveform clean_a, clean_b;
    std::optional<Waveform> mixture;
    uint64_t seed = 0;
    nlohmann::json applied_steps;
};

constexpr double kSpeedOfSound = 343.0;

// Sabine: a = 0.161 V / (S * rt60), clamped to (0, 1].
// Returns {absorption, clamped?}.
inline std::pair<double, bool> sabine_absorption(double rt60, const std::array<double, 3>& dims) {
    if (rt60 <= 0) throw std::invalid_argument("sabine: rt60 must be positive");
    for (double d : dims)
        if (d <= 0) throw std::invalid_argument("sabine: dims must be positive");
    const double volume = dims[0] * dims[1] * dims[2];
    const double surface = 2.0 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2]);
    const double a = 0.161 * volume / (surface * rt60);
    if (a > 1.0) return {1.0, true};
    return {a, false};
}

// Smallest image order whose longest path covers the RT60 decay window,
// capped at 30.
inline int image_order_for(double rt60, const std::array<double, 3>& dims) {
    const double max_dim = std::max({dims[0], dims[1], dims[2]});
    const double needed = kSpeedOfSound * rt60;
    const int k = static_cast<int>(std::ceil(needed / max_dim));
    return std::clamp(k, 1, 30);
}

// Rectangular-room image-source model. Each image contributes a fractionally
// delayed, 1/d distance-attenuated impulse whose energy decays by (1 - a)
// per wall reflection. The RIR is normalized to unit peak on the direct path.
inline Waveform simulate_rir(const RoomSpec& room, int sample_rate, uint64_t /*seed*/ = 0) {
    room.validate();
    const double refl_amp = std::sqrt(std::max(0.0, 1.0 - room.absorption));

    // Per-axis images: coordinate and reflection count for each order.
    auto axis_images = [&](double src, double dim, int max_tot) {
        std::vector<std::pair<double, int>> out;
        const int n_max = max_tot / 2 + 1;
        for (int n = -n_max; n <= n_max; n++) {
            const int refl_even = 2 * std::abs(n);
            if (refl_even <= max_tot) out.push_back({2.0 * n * dim + src, refl_even});
            const int refl_odd = std::abs(2 * n - 1);
            if (refl_odd <= max_tot) out.push_back({2.0 * n * dim - src, refl_odd});
        }
        return out;
    };

    const auto xs = axis_images(room.source_pos[0], room.dims[0], room.max_order);
    const auto ys = axis_images(room.source_pos[1], room.dims[1], room.max_order);
    const auto zs = axis_images(room.source_pos[2], room.dims[2], room.max_order);

    const int taps = 64;
    const int half = taps / 2;
    const double max_path =
        kSpeedOfSound * room.rt60 + std::sqrt(room.dims[0] * room.dims[0] + room.dims[1] * room.dims[1] +
                                              room.dims[2] * room.dims[2]);
    const int64_t len =
        static_cast<int64_t>(std::ceil(max_path / kSpeedOfSound * sample_rate)) + taps + 1;

    Waveform rir;
    rir.sample_rate = sample_rate;
    rir.samples.assign(static_cast<size_t>(len), 0.0);

    const auto win = hann_window(taps + 1);  // symmetric window for the sinc tap
    double direct_peak = 0.0;

    for (const auto& [x, rx] : xs) {
        for (const auto& [y, ry] : ys) {
            const int rxy = rx + ry;
            if (rxy > room.max_order) continue;
            for (const auto& [z, rz] : zs) {
                const int refl = rxy + rz;
                if (refl > room.max_order) continue;
                const double dx = x - room.mic_pos[0];
                const double dy = y - room.mic_pos[1];
                const double dz = z - room.mic_pos[2];
                const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
                const double delay = d / kSpeedOfSound * sample_rate;
                if (delay >= len - taps - 1) continue;
                const double amp = std::pow(refl_amp, refl) / std::max(d, 1e-2);
                const int64_t base = static_cast<int64_t>(std::floor(delay)) - half;
                for (int t = 0; t <= taps; t++) {
                    const int64_t idx = base + t;
                    if (idx < 0 || idx >= len) continue;
                    const double arg = static_cast<double>(idx) - delay;
                    const double tap = amp * sinc(arg) * win[static_cast<size_t>(t)];
                    rir.samples[static_cast<size_t>(idx)] += tap;
                    if (refl == 0) direct_peak = std::max(direct_peak, std::fabs(tap));
                }
            }
        }
    }

    if (direct_peak > 0) {
        for (auto& s : rir.samples) s /= direct_peak;
    }
    return rir;
}

// Linear convolution truncated to the input length, renormalized to the
// input peak.
inline Waveform apply_reverb(const Waveform& w, const Waveform& rir) {
    if (w.sample_rate != rir.sample_rate) throw std::invalid_argument("apply_reverb: sample rate mismatch");
    auto conv = convolve(w.samples, rir.samples);
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.assign(conv.begin(), conv.begin() + static_cast<int64_t>(w.samples.size()));
    const double pin = peak_abs(w);
    const double pout = peak_abs(out);
    if (pout > 0 && pin > 0) {
        const double g = pin / pout;
        for (auto& s : out.samples) s *= g;
    }
    return out;
}

// Noise is looped to the wave length and scaled to meet the requested SNR.
inline Waveform add_noise(const Waveform& w, const Waveform& noise, double snr_db) {
    if (w.sample_rate != noise.sample_rate) throw std::invalid_argument("add_noise: sample rate mismatch");
    const double p_noise = mean_power(noise.samples);
    if (p_noise <= 0) throw std::invalid_argument("add_noise: silent noise source");
    const double p_sig = mean_power(w.samples);

    std::vector<double> looped(w.samples.size());
    for (size_t i = 0; i < looped.size(); i++) looped[i] = noise.samples[i % noise.samples.size()];
    const double p_loop = mean_power(looped);
    if (p_loop <= 0) throw std::invalid_argument("add_noise: silent noise source after looping");

    const double gain = std::sqrt(p_sig / (p_loop * std::pow(10.0, snr_db / 10.0)));
    Waveform out = w;
    for (size_t i = 0; i < out.samples.size(); i++) out.samples[i] += gain * looped[i];
    return out;
}

// Resample down (or up) to intermediate_sr and back; length restored exactly.
inline Waveform band_limit(const Waveform& w, int intermediate_sr) {
    Waveform mid = resample(w, intermediate_sr);
    Waveform back = resample(mid, w.sample_rate);
    back.samples.resize(w.samples.size(), 0.0);
    return back;
}

// Empirical quantile with linear interpolation between order statistics.
inline double empirical_quantile(std::vector<double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
    q = std::clamp(q, 0.0, 1.0);
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline Waveform clip_quantiles(const Waveform& w, double q_lo, double q_hi) {
    if (!(0.0 <= q_lo && q_lo < q_hi && q_hi <= 1.0)) throw std::invalid_argument("clip_quantiles: bad quantiles");
    if (w.samples.empty()) return w;
    std::vector<double> sorted = w.samples;
    std::sort(sorted.begin(), sorted.end());
    const double lo = empirical_quantile(sorted, q_lo);
    const double hi = empirical_quantile(std::move(sorted), q_hi);
    Waveform out = w;
    for (auto& s : out.samples) s = std::clamp(s, lo, hi);
    return out;
}

inline int mu_law_levels_for_bitrate(double bitrate_kbps) {
    return static_cast<int>(std::lround(64.0 + (bitrate_kbps - 65.0) * (1024.0 - 64.0) / (245.0 - 65.0)));
}

inline double codec_cutoff_for_bitrate(double bitrate_kbps) {
    return 7000.0 + (bitrate_kbps - 65.0) * (11000.0 - 7000.0) / (245.0 - 65.0);
}

// mu-law companding quantization to a uniform grid of `levels` values.
inline Waveform mu_law_quantize(const Waveform& w, int levels, double mu = 255.0) {
    if (levels < 2) throw std::invalid_argument("mu_law_quantize: need at least 2 levels");
    Waveform out = w;
    const double log1p_mu = std::log1p(mu);
    for (auto& s : out.samples) {
        const double x = std::clamp(s, -1.0, 1.0);
        const double y = std::copysign(std::log1p(mu * std::fabs(x)) / log1p_mu, x);
        const double yq = std::round((y + 1.0) * 0.5 * (levels - 1)) / (levels - 1) * 2.0 - 1.0;
        s = std::copysign(std::expm1(std::fabs(yq) * log1p_mu) / mu, yq);
    }
    return out;
}

// Zero-phase FIR low-pass (Kaiser 8.6), same output length.
inline Waveform fir_low_pass(const Waveform& w, double cutoff_hz, int taps = 129, double beta = 8.6) {
    const double nyq = 0.5 * w.sample_rate;
    if (cutoff_hz >= nyq * 0.999) return w;
    std::vector<double> h(static_cast<size_t>(taps));
    const double center = 0.5 * (taps - 1);
    double s = 0.0;
    for (int n = 0; n < taps; n++) {
        h[static_cast<size_t>(n)] =
            kaiser(n, taps, beta) * 2.0 * cutoff_hz / w.sample_rate * sinc(2.0 * cutoff_hz * (n - center) / w.sample_rate);
        s += h[static_cast<size_t>(n)];
    }
    for (auto& v : h) v /= s;
    auto conv = convolve(w.samples, h);
    Waveform out;
    out.sample_rate = w.sample_rate;
    const int64_t shift = static_cast<int64_t>(center);
    out.samples.resize(w.samples.size());
    for (size_t i = 0; i < out.samples.size(); i++) {
        const int64_t idx = static_cast<int64_t>(i) + shift;
        out.samples[i] = (idx < static_cast<int64_t>(conv.size())) ? conv[static_cast<size_t>(idx)] : 0.0;
    }
    return out;
}

// Codec surrogate: mu-law quantization with a bitrate-mapped level count,
// then a bitrate-mapped low-pass. Monotone in bitrate and deterministic;
// stands in for lossy audio coding without shipping an actual codec.
inline Waveform codec_surrogate(const Waveform& w, double bitrate_kbps) {
    if (bitrate_kbps < 65.0 || bitrate_kbps > 245.0)
        throw std::invalid_argument("codec_surrogate: bitrate out of [65, 245] kbps");
    Waveform q = mu_law_quantize(w, mu_law_levels_for_bitrate(bitrate_kbps));
    return fir_low_pass(q, codec_cutoff_for_bitrate(bitrate_kbps));
}

// Zero out non-overlapping random segments until the zeroed fraction first
// reaches loss_fraction. Untouched samples are bit-identical to the input.
inline Waveform packet_loss(const Waveform& w, double loss_fraction, double dur_min_ms, double dur_max_ms,
                            CounterRng& rng) {
    if (loss_fraction < 0 || loss_fraction >= 1) throw std::invalid_argument("packet_loss: bad fraction");
    Waveform out = w;
    if (loss_fraction == 0 || w.samples.empty()) return out;

    const int64_t n = static_cast<int64_t>(w.samples.size());
    const int64_t target = static_cast<int64_t>(std::ceil(loss_fraction * static_cast<double>(n)));
    std::vector<std::pair<int64_t, int64_t>> used;  // sorted [start, end)
    int64_t zeroed = 0;

    auto overlaps = [&](int64_t a, int64_t b) {
        for (const auto& [s, e] : used)
            if (a < e && s < b) return true;
        return false;
    };

    int stall = 0;
    while (zeroed < target && stall < 10000) {
        const double dur_ms = rng.uniform(dur_min_ms, dur_max_ms);
        int64_t seg = std::max<int64_t>(1, std::llround(dur_ms * w.sample_rate / 1000.0));
        seg = std::min(seg, n);
        const int64_t start = static_cast<int64_t>(rng.uniform() * static_cast<double>(n - seg + 1));
        if (overlaps(start, start + seg)) {
            stall++;
            continue;
        }
        used.push_back({start, start + seg});
        for (int64_t i = start; i < start + seg; i++) out.samples[static_cast<size_t>(i)] = 0.0;
        zeroed += seg;
        stall = 0;
    }
    return out;
}

inline Waveform mix_tracks(const Waveform& y1, const Waveform& y2, double w) {
    if (y1.sample_rate != y2.sample_rate) throw std::invalid_argument("mix_tracks: rate mismatch");
    if (y1.samples.size() != y2.samples.size()) throw std::invalid_argument("mix_tracks: length mismatch");
    Waveform out;
    out.sample_rate = y1.sample_rate;
    out.samples.resize(y1.samples.size());
    for (size_t i = 0; i < out.samples.size(); i++) out.samples[i] = w * y1.samples[i] + (1.0 - w) * y2.samples[i];
    return out;
}

// Step identifiers for RNG keying; adding a step must never perturb another
// step's draws, so these values are frozen.
enum DegradeStep : uint64_t {
    kStepReverb = 1,
    kStepNoise = 2,
    kStepBandLimit = 3,
    kStepClip = 4,
    kStepCodec = 5,
    kStepPacketLoss = 6,
    kStepMix = 7,
};

// Full per-track pipeline in fixed order (reverb, noise, band limit, clip,
// codec, packet loss), then monaural mixing. Deterministic in (inputs,
// config, seed); every decision is recorded in applied_steps.
inline DialogueSession degrade_session(const Waveform& clean_a, const Waveform& clean_b,
                                       const DegradationConfig& config, uint64_t seed,
                                       const std::vector<Waveform>& noise_pool = {}) {
    config.validate();
    if (clean_a.sample_rate != clean_b.sample_rate)
        throw std::invalid_argument("degrade_session: clean tracks must share a sample rate");

    DialogueSession session;
    session.seed = seed;
    session.clean_a = clean_a;
    session.clean_b = clean_b;
    const size_t len = std::max(clean_a.samples.size(), clean_b.samples.size());
    session.clean_a.samples.resize(len, 0.0);
    session.clean_b.samples.resize(len, 0.0);

    nlohmann::json tracks_json = nlohmann::json::array();
    std::array<Waveform, 2> degraded;

    for (int t = 0; t < 2; t++) {
        Waveform y = (t == 0) ? session.clean_a : session.clean_b;
        nlohmann::json steps = nlohmann::json::array();

        {  // 1. reverberation
            CounterRng rng = CounterRng::keyed({seed, static_cast<uint64_t>(t), kStepReverb});
            nlohmann::json rec{{"step", "reverb"}};
            const bool fire = rng.bernoulli(config.per_step_probability);
            rec["fired"] = fire;
            if (fire) {
                RoomSpec room;
                room.rt60 = rng.uniform(config.rt60_min, config.rt60_max);
                for (int i = 0; i < 3; i++) room.dims[i] = rng.uniform(config.room_dim_min, config.room_dim_max);
                auto [a, clamped] = sabine_absorption(room.rt60, room.dims);
                room.absorption = a;
                room.max_order = image_order_for(room.rt60, room.dims);
                const double margin = 0.5;
                for (int i = 0; i < 3; i++) {
                    room.source_pos[i] = rng.uniform(margin, room.dims[i] - margin);
                    room.mic_pos[i] = rng.uniform(margin, room.dims[i] - margin);
                }
                Waveform rir = simulate_rir(room, y.sample_rate, seed);
                y = apply_reverb(y, rir);
                rec["rt60"] = room.rt60;
                rec["dims"] = room.dims;
                rec["absorption"] = room.absorption;
                rec["absorption_clamped"] = clamped;
                rec["max_order"] = room.max_order;
                rec["source_pos"] = room.source_pos;
                rec["mic_pos"] = room.mic_pos;
            }
            steps.push_back(rec);
        }
        {  // 2. background noise
            CounterRng rng = CounterRng::keyed({seed, static_cast<uint64_t>(t), kStepNoise});
            nlohmann::json rec{{"step", "noise"}};
            bool fire = rng.bernoulli(config.per_step_probability);
            if (fire && noise_pool.empty()) {
                fire = false;
                rec["skipped_no_pool"] = true;
            }
            rec["fired"] = fire;
            if (fire) {
                const int idx = rng.uniform_int(static_cast<int>(noise_pool.size()));
                const double snr = rng.uniform(config.snr_min, config.snr_max);
                y = add_noise(y, noise_pool[static_cast<size_t>(idx)], snr);
                rec["noise_index"] = idx;
                rec["snr_db"] = snr;
            }
            steps.push_back(rec);
        }
        {  // 3. band limitation
            CounterRng rng = CounterRng::keyed({seed, static_cast<uint64_t>(t), kStepBandLimit});
            nlohmann::json rec{{"step", "band_limit"}};
            const bool fire = rng.bernoulli(config.per_step_probability);
            rec["fired"] = fire;
            if (fire) {
                const int choice = rng.uniform_int(static_cast<int>(config.resample_choices.size()));
                const int sr = config.resample_choices[static_cast<size_t>(choice)];
                y = band_limit(y, sr);
                rec["intermediate_sr"] = sr;
            }
            steps.push_back(rec);
        }
        {  // 4. clipping
            CounterRng rng = CounterRng::keyed({seed, static_cast<uint64_t>(t), kStepClip});
            nlohmann::json rec{{"step", "clip"}};
            const bool fire = rng.bernoulli(config.per_step_probability);
            rec["fired"] = fire;
            if (fire) {
                const double qlo = rng.uniform(config.clip_lo_min, config.clip_lo_max);
                const double qhi = rng.uniform(config.clip_hi_min, config.clip_hi_max);
                y = clip_quantiles(y, qlo, qhi);
                rec["q_lo"] = qlo;
                rec["q_hi"] = qhi;
            }
            steps.push_back(rec);
        }
        {  // 5. codec
            CounterRng rng = CounterRng::keyed({seed, static_cast<uint64_t>(t), kStepCodec});
            nlohmann::json rec{{"step", "codec"}};
            const bool fire = rng.bernoulli(config.per_step_probability);
            rec["fired"] = fire;
            if (fire) {
                const double kbps = rng.uniform(config.bitrate_min, config.bitrate_max);
                y = codec_surrogate(y, kbps);
                rec["bitrate_kbps"] = kbps;
            }
            steps.push_back(rec);
        }
        {  // 6. packet loss
            CounterRng rng = CounterRng::keyed({seed, static_cast<uint64_t>(t), kStepPacketLoss});
            nlohmann::json rec{{"step", "packet_loss"}};
            const bool fire = rng.bernoulli(config.per_step_probability);
            rec["fired"] = fire;
            if (fire) {
                y = packet_loss(y, config.packet_loss_fraction, config.packet_dur_min_ms, config.packet_dur_max_ms,
                                rng);
                rec["loss_fraction"] = config.packet_loss_fraction;
            }
            steps.push_back(rec);
        }
        degraded[static_cast<size_t>(t)] = std::move(y);
        tracks_json.push_back(std::move(steps));
    }

    CounterRng rng = CounterRng::keyed({seed, 2ULL, kStepMix});
    const double w = rng.uniform(config.mix_w_min, config.mix_w_max);
    session.mixture = mix_tracks(degraded[0], degraded[1], w);
    session.applied_steps = {{"seed", seed}, {"tracks", tracks_json}, {"mix_weight", w}};
    return session;
}

}  // namespace duplex
