// speech_io.hpp - 8 kHz 16-bit mono RIFF/WAVE reading, writing and
// super-frame alignment. No resampling, no normalization.
#ifndef GVS_SPEECH_IO_HPP
#define GVS_SPEECH_IO_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gvs/errors.hpp"

namespace gvs::speech_io {

struct PcmSignal {
    std::vector<std::int16_t> samples;
    int sample_rate_hz = 8000;

    friend bool operator==(const PcmSignal&, const PcmSignal&) = default;
};

namespace detail {

inline std::uint32_t rd_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t rd_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void wr_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 24));
}

inline void wr_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
}

} // namespace detail

// Accepts PCM format code 1, 16-bit, mono, 8000 Hz only. Unknown chunks are
// skipped; "fmt " must precede "data".
inline PcmSignal read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw NotWav("file too small for a RIFF header");
    if (std::string(bytes.begin(), bytes.begin() + 4) != "RIFF")
        throw NotWav("missing RIFF magic");
    if (std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE")
        throw NotWav("missing WAVE form type");

    bool have_fmt = false;
    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        std::string id(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                       bytes.begin() + static_cast<std::ptrdiff_t>(off) + 4);
        std::uint32_t len = detail::rd_u32(bytes.data() + off + 4);
        off += 8;
        if (off + len > bytes.size()) throw NotWav("chunk '" + id + "' overruns the file");

        if (id == "fmt ") {
            if (len < 16) throw NotWav("fmt chunk too short");
            const std::uint8_t* f = bytes.data() + off;
            std::uint16_t format = detail::rd_u16(f);
            std::uint16_t channels = detail::rd_u16(f + 2);
            std::uint32_t rate = detail::rd_u32(f + 4);
            std::uint16_t bits = detail::rd_u16(f + 14);
            if (format != 1) throw UnsupportedFormat("only PCM (format 1) is supported");
            if (channels != 1) throw UnsupportedFormat("only mono is supported");
            if (rate != 8000) throw UnsupportedFormat("only 8000 Hz is supported");
            if (bits != 16) throw UnsupportedFormat("only 16-bit samples are supported");
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw NotWav("data chunk before fmt chunk");
            PcmSignal sig;
            sig.samples.resize(len / 2);
            for (std::size_t i = 0; i < sig.samples.size(); ++i)
                sig.samples[i] = static_cast<std::int16_t>(
                    detail::rd_u16(bytes.data() + off + 2 * i));
            return sig;
        }
        off += len + (len & 1); // chunks are word-aligned
    }
    throw NotWav("no data chunk found");
}

// Canonical 44-byte header: "RIFF", riff size, "WAVE", "fmt " of length 16,
// "data". read_wav(write_wav(x)) == x bit-exactly.
inline void write_wav(const PcmSignal& signal, const std::filesystem::path& path) {
    if (signal.sample_rate_hz != 8000)
        throw UnsupportedFormat("writer only accepts 8000 Hz signals");
    std::uint32_t data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::wr_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    detail::wr_u32(out, 16);
    detail::wr_u16(out, 1);                                   // PCM
    detail::wr_u16(out, 1);                                   // mono
    detail::wr_u32(out, 8000);                                // sample rate
    detail::wr_u32(out, 16000);                               // byte rate
    detail::wr_u16(out, 2);                                   // block align
    detail::wr_u16(out, 16);                                  // bits per sample
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::wr_u32(out, data_bytes);
    for (std::int16_t s : signal.samples)
        detail::wr_u16(out, static_cast<std::uint16_t>(s));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

// Appends zero samples until the length is a multiple of
// sub_frame_len * frames_per_super; the original length is returned so the
// decoder can truncate exactly.
inline std::pair<PcmSignal, std::size_t> pad_to_superframe(PcmSignal signal,
                                                           int sub_frame_len,
                                                           int frames_per_super) {
    if (sub_frame_len <= 0 || frames_per_super <= 0)
        throw LengthMismatch("sub_frame_len and frames_per_super must be positive");
    std::size_t unit = static_cast<std::size_t>(sub_frame_len) *
                       static_cast<std::size_t>(frames_per_super);
    std::size_t original = signal.samples.size();
    std::size_t rem = original % unit;
    if (rem != 0) signal.samples.resize(original + (unit - rem), 0);
    return {std::move(signal), original};
}

} // namespace gvs::speech_io

#endif
