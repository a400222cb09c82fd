// metrics.hpp - speech quality analytics: segmental SNR, normalized
// cross-correlation, short-time spectrograms and the CSV exports that
// reproduce the waveform/spectrogram figures as data.
#ifndef GVS_METRICS_HPP
#define GVS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gvs/errors.hpp"

namespace gvs::metrics {

inline constexpr int kSegmentSamples = 160;
inline constexpr double kSnrFloorDb = -10.0;
inline constexpr double kSnrCeilDb = 35.0;
inline constexpr double kActiveRms = 100.0; // segments quieter than this don't count

struct SegmentalSnrReport {
    std::vector<double> per_segment_db; // clamped to [-10, 35]
    double mean_db = 0.0;               // over active segments; 0 when none are active
    std::size_t active_segments = 0;
    std::size_t total_segments = 0;
};

// Per 160-sample segment: 10*log10(sum x^2 / sum (x-y)^2), clamped.
// Segments whose reference RMS is below 100 are excluded from the mean.
inline SegmentalSnrReport segmental_snr(std::span<const std::int16_t> reference,
                                        std::span<const std::int16_t> test) {
    if (reference.size() != test.size())
        throw LengthMismatch("segmental_snr needs equal-length signals");

    SegmentalSnrReport report;
    report.total_segments = reference.size() / kSegmentSamples;
    double active_sum = 0.0;
    for (std::size_t seg = 0; seg < report.total_segments; ++seg) {
        double sig = 0.0, err = 0.0;
        for (std::size_t k = seg * kSegmentSamples; k < (seg + 1) * kSegmentSamples; ++k) {
            double x = reference[k];
            double d = x - static_cast<double>(test[k]);
            sig += x * x;
            err += d * d;
        }
        double snr;
        if (err == 0.0)
            snr = kSnrCeilDb;
        else if (sig == 0.0)
            snr = kSnrFloorDb;
        else
            snr = std::clamp(10.0 * std::log10(sig / err), kSnrFloorDb, kSnrCeilDb);
        report.per_segment_db.push_back(snr);

        if (sig >= kActiveRms * kActiveRms * kSegmentSamples) {
            active_sum += snr;
            ++report.active_segments;
        }
    }
    if (report.active_segments > 0)
        report.mean_db = active_sum / static_cast<double>(report.active_segments);
    return report;
}

// max over lag in [-max_lag, max_lag] of |sum a[n] b[n+tau]| normalized by
// the full-signal energies. Values in [0, 1]; 1 means a shifted copy
// (up to sign).
inline double max_normalized_cross_correlation(std::span<const std::int16_t> a,
                                               std::span<const std::int16_t> b,
                                               std::size_t max_lag) {
    double ea = 0.0, eb = 0.0;
    for (auto v : a) ea += static_cast<double>(v) * v;
    for (auto v : b) eb += static_cast<double>(v) * v;
    if (ea == 0.0 || eb == 0.0)
        throw SilentInput("cross-correlation of an all-zero signal is undefined");

    double denom = std::sqrt(ea * eb);
    double best = 0.0;
    std::ptrdiff_t lag_limit = static_cast<std::ptrdiff_t>(max_lag);
    for (std::ptrdiff_t tau = -lag_limit; tau <= lag_limit; ++tau) {
        double acc = 0.0;
        std::ptrdiff_t n_begin = std::max<std::ptrdiff_t>(0, -tau);
        std::ptrdiff_t n_end =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(a.size()),
                                     static_cast<std::ptrdiff_t>(b.size()) - tau);
        for (std::ptrdiff_t n = n_begin; n < n_end; ++n)
            acc += static_cast<double>(a[static_cast<std::size_t>(n)]) *
                   b[static_cast<std::size_t>(n + tau)];
        best = std::max(best, std::abs(acc) / denom);
    }
    return best;
}

struct Spectrogram {
    std::vector<std::vector<double>> magnitudes_db; // [frame][bin], bins = window/2 + 1
    std::size_t window_len = 256;
    std::size_t hop_len = 128;
    int sample_rate_hz = 8000;
};

namespace detail {

// in-place iterative radix-2 transform, n a power of two
inline void fft(std::vector<std::complex<double>>& a) {
    std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

} // namespace detail

inline constexpr double kSpectrogramEpsilon = 1e-10;

// Hann-windowed short-time transform magnitudes, 20*log10(|X| + 1e-10).
inline Spectrogram spectrogram(std::span<const std::int16_t> signal,
                               std::size_t window_len = 256, std::size_t hop_len = 128) {
    if (window_len < 2 || (window_len & (window_len - 1)) != 0)
        throw BadWindow("window length must be a power of two");
    if (hop_len == 0 || hop_len > window_len)
        throw BadWindow("hop length must be in (0, window]");

    Spectrogram spec;
    spec.window_len = window_len;
    spec.hop_len = hop_len;

    std::vector<double> window(window_len);
    for (std::size_t n = 0; n < window_len; ++n)
        window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                         static_cast<double>(window_len - 1));

    if (signal.size() < window_len) return spec;
    std::size_t frames = (signal.size() - window_len) / hop_len + 1;
    std::size_t bins = window_len / 2 + 1;
    spec.magnitudes_db.reserve(frames);

    std::vector<std::complex<double>> buf(window_len);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t n = 0; n < window_len; ++n)
            buf[n] = {static_cast<double>(signal[t * hop_len + n]) * window[n], 0.0};
        detail::fft(buf);
        std::vector<double> row(bins);
        for (std::size_t b = 0; b < bins; ++b)
            row[b] = 20.0 * std::log10(std::abs(buf[b]) + kSpectrogramEpsilon);
        spec.magnitudes_db.push_back(std::move(row));
    }
    return spec;
}

// CSV with header "index,original,synthesized", one row per sample.
inline void export_overlay_csv(std::span<const std::int16_t> original,
                               std::span<const std::int16_t> synthesized,
                               const std::filesystem::path& path) {
    if (original.size() != synthesized.size())
        throw LengthMismatch("overlay export needs equal-length signals");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << "index,original,synthesized\n";
    for (std::size_t i = 0; i < original.size(); ++i)
        out << i << ',' << original[i] << ',' << synthesized[i] << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

// CSV matrix, one row per time frame, one column per frequency bin,
// dB values with 2 decimals. Locale-independent by construction.
inline void export_spectrogram_csv(const Spectrogram& spec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    std::size_t bins = spec.window_len / 2 + 1;
    for (std::size_t b = 0; b < bins; ++b) out << (b ? "," : "") << "bin_" << b;
    out << '\n';
    char cell[32];
    for (const auto& row : spec.magnitudes_db) {
        for (std::size_t b = 0; b < row.size(); ++b) {
            std::snprintf(cell, sizeof cell, "%.2f", row[b]);
            out << (b ? "," : "") << cell;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace gvs::metrics

#endif
