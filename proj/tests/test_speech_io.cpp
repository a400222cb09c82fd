// WAV container and super-frame padding tests.
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "gvs/speech_io.hpp"

using namespace gvs;
using speech_io::PcmSignal;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    auto dir = fs::temp_directory_path() / "gvs_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 24));
}

void push_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
}

std::vector<std::uint8_t> make_wav(std::uint16_t format, std::uint16_t channels,
                                   std::uint32_t rate, std::uint16_t bits,
                                   const std::vector<std::int16_t>& samples) {
    std::vector<std::uint8_t> v;
    v.insert(v.end(), {'R', 'I', 'F', 'F'});
    push_u32(v, 36 + static_cast<std::uint32_t>(samples.size() * 2));
    v.insert(v.end(), {'W', 'A', 'V', 'E'});
    v.insert(v.end(), {'f', 'm', 't', ' '});
    push_u32(v, 16);
    push_u16(v, format);
    push_u16(v, channels);
    push_u32(v, rate);
    push_u32(v, rate * channels * bits / 8);
    push_u16(v, static_cast<std::uint16_t>(channels * bits / 8));
    push_u16(v, bits);
    v.insert(v.end(), {'d', 'a', 't', 'a'});
    push_u32(v, static_cast<std::uint32_t>(samples.size() * 2));
    for (auto s : samples) push_u16(v, static_cast<std::uint16_t>(s));
    return v;
}

} // namespace

TEST_SUITE("speech_io") {

TEST_CASE("reads a minimal three-sample file") {
    auto p = temp_file("three.wav");
    write_bytes(p, make_wav(1, 1, 8000, 16, {0, 100, -100}));
    auto sig = speech_io::read_wav(p);
    CHECK(sig.samples == std::vector<std::int16_t>{0, 100, -100});
    CHECK(sig.sample_rate_hz == 8000);
}

TEST_CASE("write/read round trip is the identity") {
    std::mt19937_64 rng(301);
    for (std::size_t len : {0u, 1u, 159u, 160u, 4096u}) {
        PcmSignal sig;
        sig.samples.resize(len);
        for (auto& s : sig.samples) s = static_cast<std::int16_t>(rng());
        auto p = temp_file("roundtrip.wav");
        speech_io::write_wav(sig, p);
        CHECK(speech_io::read_wav(p) == sig);
    }
}

TEST_CASE("writer emits the canonical 44-byte header") {
    PcmSignal sig;
    sig.samples.assign(8000, 1234);
    auto p = temp_file("size.wav");
    speech_io::write_wav(sig, p);
    CHECK(fs::file_size(p) == 44 + 16000);

    speech_io::write_wav(PcmSignal{}, p);
    CHECK(fs::file_size(p) == 44);
    CHECK(speech_io::read_wav(p).samples.empty());
}

TEST_CASE("rejects unsupported formats") {
    auto p = temp_file("bad.wav");

    write_bytes(p, make_wav(1, 2, 44100, 16, {0, 0}));
    CHECK_THROWS_AS(speech_io::read_wav(p), UnsupportedFormat);

    write_bytes(p, make_wav(1, 1, 16000, 16, {0}));
    CHECK_THROWS_AS(speech_io::read_wav(p), UnsupportedFormat);

    write_bytes(p, make_wav(1, 1, 8000, 8, {0}));
    CHECK_THROWS_AS(speech_io::read_wav(p), UnsupportedFormat);

    write_bytes(p, make_wav(3, 1, 8000, 16, {0})); // IEEE float code
    CHECK_THROWS_AS(speech_io::read_wav(p), UnsupportedFormat);
}

TEST_CASE("rejects non-WAV input") {
    auto p = temp_file("noise.bin");
    write_bytes(p, {'M', 'Z', 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    CHECK_THROWS_AS(speech_io::read_wav(p), NotWav);

    CHECK_THROWS_AS(speech_io::read_wav(temp_file("missing.wav")), IoError);
}

TEST_CASE("rejects a data chunk that overruns the file") {
    auto bytes = make_wav(1, 1, 8000, 16, {1, 2, 3, 4});
    bytes.resize(bytes.size() - 4); // chop two samples but keep the declared size
    auto p = temp_file("cut.wav");
    write_bytes(p, bytes);
    CHECK_THROWS_AS(speech_io::read_wav(p), NotWav);
}

TEST_CASE("skips unknown chunks before data") {
    std::vector<std::uint8_t> v;
    v.insert(v.end(), {'R', 'I', 'F', 'F'});
    push_u32(v, 0); // nothing checks the RIFF size
    v.insert(v.end(), {'W', 'A', 'V', 'E'});
    v.insert(v.end(), {'f', 'm', 't', ' '});
    push_u32(v, 16);
    push_u16(v, 1);
    push_u16(v, 1);
    push_u32(v, 8000);
    push_u32(v, 16000);
    push_u16(v, 2);
    push_u16(v, 16);
    v.insert(v.end(), {'L', 'I', 'S', 'T'});
    push_u32(v, 3); // odd size exercises the pad byte
    v.insert(v.end(), {'x', 'y', 'z', 0});
    v.insert(v.end(), {'d', 'a', 't', 'a'});
    push_u32(v, 2);
    push_u16(v, static_cast<std::uint16_t>(-7));

    auto p = temp_file("chunks.wav");
    write_bytes(p, v);
    CHECK(speech_io::read_wav(p).samples == std::vector<std::int16_t>{-7});
}

TEST_CASE("pad_to_superframe arithmetic") {
    PcmSignal sig;
    sig.samples.assign(2560, 5);
    auto [aligned, len1] = speech_io::pad_to_superframe(sig, 160, 16);
    CHECK(aligned.samples.size() == 2560);
    CHECK(len1 == 2560);

    sig.samples.assign(2561, 5);
    auto [padded, len2] = speech_io::pad_to_superframe(sig, 160, 16);
    CHECK(padded.samples.size() == 5120);
    CHECK(len2 == 2561);
    CHECK(padded.samples[2560] == 5);
    CHECK(padded.samples[2561] == 0);

    auto [empty, len3] = speech_io::pad_to_superframe(PcmSignal{}, 160, 16);
    CHECK(empty.samples.empty());
    CHECK(len3 == 0);
}

TEST_CASE("pad_to_superframe property: aligned length, preserved prefix") {
    std::mt19937_64 rng(302);
    for (int trial = 0; trial < 50; ++trial) {
        PcmSignal sig;
        sig.samples.resize(rng() % 10000);
        for (auto& s : sig.samples) s = static_cast<std::int16_t>(rng());
        int l = 160 * (1 + static_cast<int>(rng() % 3));
        int n = 1 + static_cast<int>(rng() % 32);
        auto [padded, original] = speech_io::pad_to_superframe(sig, l, n);
        CHECK(padded.samples.size() %
                  (static_cast<std::size_t>(l) * static_cast<std::size_t>(n)) == 0);
        REQUIRE(original == sig.samples.size());
        CHECK(std::equal(sig.samples.begin(), sig.samples.end(), padded.samples.begin()));
    }
}

} // TEST_SUITE
