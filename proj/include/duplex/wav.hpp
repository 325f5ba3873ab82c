#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace duplex {

struct Waveform {
    std::vector<double> samples;
    int sample_rate = 24000;

    double duration() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
    }
    size_t size() const { return samples.size(); }
};

inline double peak_abs(const Waveform& w) {
    double p = 0.0;
    for (double s : w.samples) p = std::max(p, std::fabs(s));
    return p;
}

inline double mean_power(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc / static_cast<double>(x.size());
}

namespace detail {

inline uint32_t rd_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
inline uint16_t rd_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
inline void wr_u32(std::vector<unsigned char>& v, uint32_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 24) & 0xff);
}
inline void wr_u16(std::vector<unsigned char>& v, uint16_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
}

}  // namespace detail

// PCM 16-bit mono RIFF/WAVE is the only on-disk audio format.
inline Waveform load_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_wav: cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("load_wav: not a RIFF/WAVE file: " + path);

    size_t pos = 12;
    int sample_rate = 0;
    int channels = 0;
    int bits = 0;
    int format = 0;
    bool got_fmt = false;
    const unsigned char* data_ptr = nullptr;
    size_t data_len = 0;

    while (pos + 8 <= buf.size()) {
        const char* id = reinterpret_cast<const char*>(buf.data() + pos);
        uint32_t chunk_len = detail::rd_u32(buf.data() + pos + 4);
        size_t body = pos + 8;
        if (body + chunk_len > buf.size()) chunk_len = static_cast<uint32_t>(buf.size() - body);
        if (std::memcmp(id, "fmt ", 4) == 0 && chunk_len >= 16) {
            format = detail::rd_u16(buf.data() + body);
            channels = detail::rd_u16(buf.data() + body + 2);
            sample_rate = static_cast<int>(detail::rd_u32(buf.data() + body + 4));
            bits = detail::rd_u16(buf.data() + body + 14);
            got_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = buf.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);
    }

    if (!got_fmt || data_ptr == nullptr) throw std::runtime_error("load_wav: missing fmt/data chunk: " + path);
    if (format != 1) throw std::runtime_error("load_wav: only PCM supported: " + path);
    if (channels != 1) throw std::runtime_error("load_wav: only mono supported: " + path);
    if (bits != 16) throw std::runtime_error("load_wav: only 16-bit supported: " + path);
    if (sample_rate <= 0) throw std::runtime_error("load_wav: bad sample rate: " + path);

    Waveform w;
    w.sample_rate = sample_rate;
    const size_t n = data_len / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; i++) {
        int16_t s = static_cast<int16_t>(detail::rd_u16(data_ptr + 2 * i));
        w.samples[i] = static_cast<double>(s) / 32768.0;
    }
    return w;
}

// Values are clamped to [-1, 1] before quantization.
inline void save_wav(const Waveform& w, const std::string& path) {
    if (w.sample_rate <= 0) throw std::invalid_argument("save_wav: bad sample rate");
    std::vector<unsigned char> out;
    out.reserve(44 + 2 * w.samples.size());
    const uint32_t data_bytes = static_cast<uint32_t>(2 * w.samples.size());
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::wr_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    detail::wr_u32(out, 16);
    detail::wr_u16(out, 1);  // PCM
    detail::wr_u16(out, 1);  // mono
    detail::wr_u32(out, static_cast<uint32_t>(w.sample_rate));
    detail::wr_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
    detail::wr_u16(out, 2);
    detail::wr_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::wr_u32(out, data_bytes);
    for (double x : w.samples) {
        double c = std::clamp(x, -1.0, 1.0);
        long q = std::lround(c * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        detail::wr_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_wav: cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("save_wav: write failed: " + path);
}

}  // namespace duplex
