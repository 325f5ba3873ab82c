#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace duplex {

// SplitMix64 finalizer. Good enough avalanche for stream derivation and
// simulation draws; not for cryptography.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_key(uint64_t a, uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL));
}

inline uint64_t hash_str64(const char* s) {
    // FNV-1a
    uint64_t h = 0xcbf29ce484222325ULL;
    for (; *s; ++s) {
        h ^= static_cast<unsigned char>(*s);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Counter-based generator: draw i of stream `key` is mix64(key + i * gamma).
// Draws are a pure function of (key, counter), so independent streams never
// perturb each other and resuming at a known counter is exact.
class CounterRng {
public:
    explicit CounterRng(uint64_t key) : key_(key) {}

    static CounterRng keyed(std::initializer_list<uint64_t> parts) {
        uint64_t k = 0x2545f4914f6cdd1dULL;
        for (uint64_t p : parts) k = mix_key(k, p);
        return CounterRng(k);
    }

    CounterRng fork(uint64_t stream) const { return CounterRng(mix_key(key_, stream)); }

    uint64_t key() const { return key_; }
    uint64_t counter() const { return counter_; }
    void set_counter(uint64_t c) { counter_ = c; }

    uint64_t next_u64() { return mix64(key_ + counter_++ * 0x9e3779b97f4a7c15ULL); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // {0, ..., n-1}
    int uniform_int(int n) {
        int v = static_cast<int>(uniform() * n);
        return v >= n ? n - 1 : v;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double gaussian() {
        // Box-Muller; u1 shifted away from zero so log() is finite.
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
};

}  // namespace duplex
