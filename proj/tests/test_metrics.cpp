// Metrics tests: segmental SNR closed forms, cross-correlation identities,
// spectrogram against a direct O(n^2) discrete-transform oracle, CSV schema.
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gvs/metrics.hpp"
#include "test_signals.hpp"

using namespace gvs;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    auto dir = fs::temp_directory_path() / "gvs_metrics_tests";
    fs::create_directories(dir);
    return dir / name;
}

// brute-force reference transform
std::vector<std::complex<double>> direct_dft(const std::vector<double>& x) {
    std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(m) / static_cast<double>(n);
            acc += x[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("identical signals pin the clamp ceiling") {
    auto x = test_signals::synthetic_vowel(3200);
    auto rep = metrics::segmental_snr(x, x);
    CHECK(rep.total_segments == 20);
    CHECK(rep.active_segments > 0);
    CHECK(rep.mean_db == doctest::Approx(35.0));
    for (std::size_t i = 0; i < rep.per_segment_db.size(); ++i)
        CHECK(rep.per_segment_db[i] == doctest::Approx(35.0));
}

TEST_CASE("all-zero test signal scores 0 dB against an active reference") {
    std::vector<std::int16_t> ref(320, 5000);
    std::vector<std::int16_t> zeros(320, 0);
    auto rep = metrics::segmental_snr(ref, zeros);
    for (auto v : rep.per_segment_db) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("white-error SNR matches the closed form") {
    std::mt19937_64 rng(501);
    std::size_t n = 160 * 150;
    std::vector<std::int16_t> ref(n, 5000);
    std::vector<std::int16_t> test(n);
    double p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // uniform error in [-866, 866], var = 866^2/3
        double e = (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * 866.0;
        p += e * e;
        test[i] = static_cast<std::int16_t>(5000 + e);
    }
    p /= static_cast<double>(n);
    double expected = 10.0 * std::log10(5000.0 * 5000.0 / p);
    auto rep = metrics::segmental_snr(ref, test);
    CHECK(rep.active_segments == 150);
    CHECK(std::abs(rep.mean_db - expected) < 0.5);
}

TEST_CASE("quiet reference segments are excluded from the mean") {
    std::vector<std::int16_t> ref(480, 0);
    std::vector<std::int16_t> test(480, 0);
    for (int i = 160; i < 320; ++i) {
        ref[static_cast<std::size_t>(i)] = 8000; // one active segment
        test[static_cast<std::size_t>(i)] = 8000;
    }
    auto rep = metrics::segmental_snr(ref, test);
    CHECK(rep.total_segments == 3);
    CHECK(rep.active_segments == 1);
    CHECK(rep.mean_db == doctest::Approx(35.0));
}

TEST_CASE("segmental SNR requires equal lengths") {
    std::vector<std::int16_t> a(320), b(321);
    CHECK_THROWS_AS(metrics::segmental_snr(a, b), LengthMismatch);
}

TEST_CASE("cross-correlation identities") {
    auto x = test_signals::synthetic_vowel(2000);
    CHECK(metrics::max_normalized_cross_correlation(x, x, 0) ==
          doctest::Approx(1.0).epsilon(1e-9));

    std::vector<std::int16_t> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = static_cast<std::int16_t>(-x[i]);
    CHECK(metrics::max_normalized_cross_correlation(x, neg, 0) ==
          doctest::Approx(1.0).epsilon(1e-9));

    auto y = test_signals::speech_like(2000);
    double ab = metrics::max_normalized_cross_correlation(x, y, 64);
    double ba = metrics::max_normalized_cross_correlation(y, x, 64);
    CHECK(std::abs(ab - ba) < 1e-9);
}

TEST_CASE("cross-correlation of shifted impulses") {
    std::vector<std::int16_t> a(64, 0), b(64, 0);
    a[0] = 1000;
    b[5] = 1000;
    CHECK(metrics::max_normalized_cross_correlation(a, b, 5) == doctest::Approx(1.0));
    CHECK(metrics::max_normalized_cross_correlation(a, b, 8) == doctest::Approx(1.0));
    CHECK(metrics::max_normalized_cross_correlation(a, b, 4) == doctest::Approx(0.0));
}

TEST_CASE("cross-correlation rejects silent input") {
    std::vector<std::int16_t> silent(100, 0), live(100, 100);
    CHECK_THROWS_AS(metrics::max_normalized_cross_correlation(silent, live, 10), SilentInput);
    CHECK_THROWS_AS(metrics::max_normalized_cross_correlation(live, silent, 10), SilentInput);
}

TEST_CASE("spectrogram of silence sits at the epsilon floor") {
    std::vector<std::int16_t> zeros(512, 0);
    auto spec = metrics::spectrogram(zeros, 256, 128);
    CHECK(spec.magnitudes_db.size() == 3);
    for (const auto& row : spec.magnitudes_db) {
        CHECK(row.size() == 129);
        for (double v : row) CHECK(v == doctest::Approx(-200.0).epsilon(1e-9));
    }
}

TEST_CASE("1 kHz sine peaks in bin 32 of a 256-point window") {
    auto sine = test_signals::sine(2048, 1000.0, 30000.0);
    auto spec = metrics::spectrogram(sine, 256, 128);
    REQUIRE(!spec.magnitudes_db.empty());
    for (const auto& row : spec.magnitudes_db) {
        std::size_t argmax = 0;
        for (std::size_t b = 1; b < row.size(); ++b)
            if (row[b] > row[argmax]) argmax = b;
        CHECK(argmax == 32);
    }
}

TEST_CASE("transform magnitudes match the direct oracle") {
    std::mt19937_64 rng(502);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::int16_t> sig(256);
        for (auto& v : sig) v = static_cast<std::int16_t>(rng());
        auto spec = metrics::spectrogram(sig, 256, 256);
        REQUIRE(spec.magnitudes_db.size() == 1);

        std::vector<double> windowed(256);
        for (std::size_t n = 0; n < 256; ++n)
            windowed[n] = static_cast<double>(sig[n]) *
                          (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / 255.0));
        auto ref = direct_dft(windowed);
        for (std::size_t b = 0; b < 129; ++b) {
            double expected = 20.0 * std::log10(std::abs(ref[b]) + 1e-10);
            double got = spec.magnitudes_db[0][b];
            CHECK(std::abs(got - expected) <=
                  1e-6 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("radix-2 transform satisfies Parseval") {
    std::mt19937_64 rng(503);
    std::vector<std::complex<double>> buf(256);
    double time_energy = 0.0;
    for (auto& c : buf) {
        double v = static_cast<double>(static_cast<std::int16_t>(rng()));
        c = {v, 0.0};
        time_energy += v * v;
    }
    metrics::detail::fft(buf);
    double freq_energy = 0.0;
    for (const auto& c : buf) freq_energy += std::norm(c);
    freq_energy /= 256.0;
    CHECK(std::abs(freq_energy - time_energy) <= 1e-6 * time_energy);
}

TEST_CASE("spectrogram window validation") {
    std::vector<std::int16_t> sig(512, 1);
    CHECK_THROWS_AS(metrics::spectrogram(sig, 100, 50), BadWindow);
    CHECK_THROWS_AS(metrics::spectrogram(sig, 256, 0), BadWindow);
    CHECK_THROWS_AS(metrics::spectrogram(sig, 256, 257), BadWindow);
    CHECK(metrics::spectrogram(sig, 256, 256).magnitudes_db.size() == 2);
    // shorter than one window: no frames
    std::vector<std::int16_t> tiny(100, 1);
    CHECK(metrics::spectrogram(tiny, 256, 128).magnitudes_db.empty());
}

TEST_CASE("overlay CSV schema and lossless round trip") {
    std::vector<std::int16_t> a{1234, -32768};
    std::vector<std::int16_t> b{-1, 32767};
    auto p = temp_file("overlay.csv");
    metrics::export_overlay_csv(a, b, p);
    auto lines = read_lines(p);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "index,original,synthesized");
    CHECK(lines[1] == "0,1234,-1");
    CHECK(lines[2] == "1,-32768,32767");

    std::vector<std::int16_t> c(100), d(99);
    CHECK_THROWS_AS(metrics::export_overlay_csv(c, d, p), LengthMismatch);
}

TEST_CASE("spectrogram CSV schema, quantization and locale safety") {
    auto sine = test_signals::sine(256, 1000.0, 30000.0);
    auto spec = metrics::spectrogram(sine, 256, 128);
    REQUIRE(spec.magnitudes_db.size() == 1);
    auto p = temp_file("spec.csv");
    metrics::export_spectrogram_csv(spec, p);
    auto lines = read_lines(p);
    REQUIRE(lines.size() == 2);

    // header names 129 bins; the data row has 129 cells, dot decimals only
    CHECK(lines[0].starts_with("bin_0,bin_1,"));
    std::stringstream row(lines[1]);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
        CHECK(cell.find_first_not_of("0123456789.-") == std::string::npos);
        double parsed = std::stod(cell);
        CHECK(std::abs(parsed - spec.magnitudes_db[0][count]) <= 0.005);
        ++count;
    }
    CHECK(count == 129);

    // empty signal: header only
    metrics::export_spectrogram_csv(metrics::spectrogram(std::vector<std::int16_t>{}, 256, 128), p);
    CHECK(read_lines(p).size() == 1);
}

} // TEST_SUITE
