#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>

#include "duplex/rng.hpp"
#include "duplex/wav.hpp"

using namespace duplex;

namespace {
std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("full scale positive sample decodes to 32767/32768") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples = {1.0};
    const auto path = tmp_path("duplex_fullscale.wav");
    save_wav(w, path);
    Waveform r = load_wav(path);
    REQUIRE(r.samples.size() == 1);
    REQUIRE(r.samples[0] == Catch::Approx(32767.0 / 32768.0).epsilon(0));
    std::remove(path.c_str());
}

TEST_CASE("all-zero one second file") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(24000, 0.0);
    const auto path = tmp_path("duplex_zero.wav");
    save_wav(w, path);
    Waveform r = load_wav(path);
    REQUIRE(r.sample_rate == 24000);
    REQUIRE(r.samples.size() == 24000);
    REQUIRE(r.duration() == Catch::Approx(1.0));
    for (double s : r.samples) REQUIRE(s == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("round trip quantization error bounded by 2^-15") {
    CounterRng rng(7);
    Waveform w;
    w.sample_rate = 24000;
    w.samples.resize(4096);
    for (auto& s : w.samples) s = rng.uniform(-0.99, 0.99);
    const auto path = tmp_path("duplex_rt.wav");
    save_wav(w, path);
    Waveform r = load_wav(path);
    REQUIRE(r.samples.size() == w.samples.size());
    double max_err = 0;
    for (size_t i = 0; i < w.samples.size(); i++) max_err = std::max(max_err, std::fabs(r.samples[i] - w.samples[i]));
    REQUIRE(max_err <= std::pow(2.0, -15.0));
    std::remove(path.c_str());
}

TEST_CASE("constant half amplitude survives the trip") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(100, 0.5);
    const auto path = tmp_path("duplex_half.wav");
    save_wav(w, path);
    Waveform r = load_wav(path);
    for (double s : r.samples) REQUIRE(std::fabs(s - 0.5) <= std::pow(2.0, -15.0));
    std::remove(path.c_str());
}

TEST_CASE("out of range values clamp to full scale on disk") {
    Waveform w;
    w.sample_rate = 8000;
    w.samples = {1.5, -2.0};
    const auto path = tmp_path("duplex_clamp.wav");
    save_wav(w, path);
    Waveform r = load_wav(path);
    REQUIRE(r.samples[0] == Catch::Approx(32767.0 / 32768.0).epsilon(0));
    REQUIRE(r.samples[1] == Catch::Approx(-1.0).epsilon(0));
    std::remove(path.c_str());
}

TEST_CASE("header frame count for 20 s at 24 kHz") {
    Waveform w;
    w.sample_rate = 24000;
    w.samples.assign(480000, 0.1);
    const auto path = tmp_path("duplex_20s.wav");
    save_wav(w, path);
    Waveform r = load_wav(path);
    REQUIRE(r.samples.size() == 480000);
    std::remove(path.c_str());
}

TEST_CASE("load errors") {
    REQUIRE_THROWS_AS(load_wav("/nonexistent/definitely_missing.wav"), std::runtime_error);
}
