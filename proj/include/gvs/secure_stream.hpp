// secure_stream.hpp - the end-to-end pipeline and its container format.
//
// Sender: pad to whole super-frames, scramble each super-frame with a
// keystream-derived permutation table, push the scrambled speech through one
// continuous RPE-LTP encoder, and multiplex the DES-CBC-encrypted table in
// front of each super-frame's packed codec frames. Receiver: the exact
// inverse. An eavesdropper path decodes without descrambling, which is what
// a receiver lacking the key would hear.
//
// Wire layout (all integers big-endian):
//   header: "GVS1" | cipher_id u8 | sub_frame_len u16 | frames_per_super u16
//           | superframe_count u32 | original_length u64
//   record: iv[8] | table_ct_len u16 | table_ciphertext | packed frames
//           (frames_per_super * sub_frame_len/160 frames of 33 bytes)
#ifndef GVS_SECURE_STREAM_HPP
#define GVS_SECURE_STREAM_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gvs/des.hpp"
#include "gvs/errors.hpp"
#include "gvs/gsm0610.hpp"
#include "gvs/scrambler.hpp"
#include "gvs/speech_io.hpp"

namespace gvs::secure_stream {

using scrambler::InversionMode;
using scrambler::PermutationTable;
using scrambler::ScrambleConfig;
using speech_io::PcmSignal;

inline constexpr std::uint8_t kCipherDesCbc = 0x01;
inline constexpr std::size_t kHeaderBytes = 21;

struct StreamHeader {
    std::uint8_t cipher_id = kCipherDesCbc;
    std::uint16_t sub_frame_len = 160;
    std::uint16_t frames_per_super = 16;
    std::uint32_t superframe_count = 0;
    std::uint64_t original_length = 0;
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

inline void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    put_u16(v, static_cast<std::uint16_t>(x >> 16));
    put_u16(v, static_cast<std::uint16_t>(x));
}

inline void put_u64(std::vector<std::uint8_t>& v, std::uint64_t x) {
    put_u32(v, static_cast<std::uint32_t>(x >> 32));
    put_u32(v, static_cast<std::uint32_t>(x));
}

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> data) : data_(data) {}

    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > data_.size()) throw Truncated("stream ends mid-field");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint8_t u8() { return take(1)[0]; }

    std::uint16_t u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
    }

    std::uint32_t u32() {
        std::uint32_t hi = u16(), lo = u16();
        return (hi << 16) | lo;
    }

    std::uint64_t u64() {
        std::uint64_t hi = u32(), lo = u32();
        return (hi << 32) | lo;
    }

    bool exhausted() const { return pos_ == data_.size(); }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline des::Block be64_block(std::uint64_t v) {
    des::Block b{};
    for (int i = 7; i >= 0; --i) {
        b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xFF);
        v >>= 8;
    }
    return b;
}

} // namespace detail

inline StreamHeader read_header(detail::Cursor& cur) {
    auto magic = cur.take(4);
    if (!(magic[0] == 'G' && magic[1] == 'V' && magic[2] == 'S' && magic[3] == '1'))
        throw BadHeader("missing GVS1 magic");
    StreamHeader h;
    h.cipher_id = cur.u8();
    h.sub_frame_len = cur.u16();
    h.frames_per_super = cur.u16();
    h.superframe_count = cur.u32();
    h.original_length = cur.u64();
    if (h.cipher_id != kCipherDesCbc) throw BadHeader("unsupported cipher id");
    if (h.sub_frame_len == 0 || h.sub_frame_len % 160 != 0)
        throw BadHeader("sub_frame_len must be a positive multiple of 160");
    if (h.frames_per_super < 1 || h.frames_per_super > 256)
        throw BadHeader("frames_per_super must be in [1,256]");
    return h;
}

inline StreamHeader read_header(std::span<const std::uint8_t> stream) {
    detail::Cursor cur(stream);
    return read_header(cur);
}

namespace detail {

// Core sender path with the table source injected; tests use this to force
// identity tables. Production code always derives tables from the keystream.
template <typename TableSource>
std::vector<std::uint8_t> encrypt_with_tables(const PcmSignal& signal, const des::Key& key,
                                              const ScrambleConfig& config, InversionMode mode,
                                              TableSource&& table_for) {
    config.validate();
    auto [padded, original_length] =
        speech_io::pad_to_superframe(signal, config.sub_frame_len, config.frames_per_super);
    std::size_t unit = static_cast<std::size_t>(config.sub_frame_len) *
                       static_cast<std::size_t>(config.frames_per_super);
    std::size_t count = unit == 0 ? 0 : padded.samples.size() / unit;

    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'G', 'V', 'S', '1'});
    out.push_back(kCipherDesCbc);
    put_u16(out, static_cast<std::uint16_t>(config.sub_frame_len));
    put_u16(out, static_cast<std::uint16_t>(config.frames_per_super));
    put_u32(out, static_cast<std::uint32_t>(count));
    put_u64(out, original_length);

    des::KeySchedule ks(key);
    gsm0610::Encoder encoder;
    for (std::size_t s = 0; s < count; ++s) {
        PermutationTable table = table_for(static_cast<std::uint32_t>(s));
        std::span<const std::int16_t> super(padded.samples.data() + s * unit, unit);
        std::vector<std::int16_t> scrambled = scrambler::scramble(super, table, mode);

        des::Block iv = des::encrypt_block(ks, be64_block(s));
        std::vector<std::uint8_t> ct =
            des::cbc_encrypt(key, iv, scrambler::serialize_table(table));

        out.insert(out.end(), iv.begin(), iv.end());
        put_u16(out, static_cast<std::uint16_t>(ct.size()));
        out.insert(out.end(), ct.begin(), ct.end());

        for (std::size_t off = 0; off < unit; off += gsm0610::kFrameSamples) {
            auto frame = encoder.encode_frame(
                std::span<const std::int16_t>(scrambled.data() + off, gsm0610::kFrameSamples));
            auto packed = gsm0610::pack_frame(frame);
            out.insert(out.end(), packed.begin(), packed.end());
        }
    }
    return out;
}

// Decode one record's packed frames through the shared decoder state.
// A frame with a corrupted magic nibble is replaced by silence.
inline void decode_frames(Cursor& cur, gsm0610::Decoder& decoder, std::size_t frame_count,
                          std::vector<std::int16_t>& out) {
    for (std::size_t f = 0; f < frame_count; ++f) {
        auto bytes = cur.take(gsm0610::kPackedFrameBytes);
        try {
            auto decoded = decoder.decode_frame(gsm0610::unpack_frame(bytes));
            out.insert(out.end(), decoded.begin(), decoded.end());
        } catch (const BadMagic&) {
            out.insert(out.end(), gsm0610::kFrameSamples, 0);
        }
    }
}

} // namespace detail

inline std::vector<std::uint8_t> encrypt_stream(const PcmSignal& signal, const des::Key& key,
                                                const ScrambleConfig& config = {},
                                                InversionMode mode = InversionMode::time_reverse) {
    return detail::encrypt_with_tables(signal, key, config, mode, [&](std::uint32_t s) {
        des::Keystream ks(key, s);
        return scrambler::generate_table(ks, s, config);
    });
}

inline PcmSignal decrypt_stream(std::span<const std::uint8_t> stream, const des::Key& key,
                                InversionMode mode = InversionMode::time_reverse) {
    detail::Cursor cur(stream);
    StreamHeader h = read_header(cur);
    std::size_t unit = static_cast<std::size_t>(h.sub_frame_len) * h.frames_per_super;
    std::size_t frames_per_record = unit / gsm0610::kFrameSamples;

    PcmSignal out;
    gsm0610::Decoder decoder;
    for (std::uint32_t s = 0; s < h.superframe_count; ++s) {
        auto iv_bytes = cur.take(8);
        std::uint16_t ct_len = cur.u16();
        if (ct_len == 0 || ct_len % 8 != 0)
            throw BadHeader("table ciphertext length must be a positive multiple of 8");
        auto ct = cur.take(ct_len);

        std::vector<std::int16_t> decoded;
        decoded.reserve(unit);
        detail::decode_frames(cur, decoder, frames_per_record, decoded);

        des::Block iv{};
        std::copy(iv_bytes.begin(), iv_bytes.end(), iv.begin());
        PermutationTable table;
        try {
            table = scrambler::deserialize_table(des::cbc_decrypt(key, iv, ct));
        } catch (const Error& e) {
            throw DecryptionFailed(std::string("super-frame table rejected (wrong key or "
                                               "tampering): ") + e.what());
        }
        if (table.size() != static_cast<std::size_t>(h.frames_per_super))
            throw DecryptionFailed("table sub-frame count does not match the stream header");
        table.superframe_index = s;

        auto clear = scrambler::descramble(decoded, table, mode);
        out.samples.insert(out.samples.end(), clear.begin(), clear.end());
    }

    if (h.original_length > out.samples.size())
        throw BadHeader("original_length exceeds the decoded sample count");
    out.samples.resize(h.original_length);
    return out;
}

// Decode the codec frames without descrambling: the signal an attacker with
// a standard decoder but no key recovers. Output covers all padded
// super-frames (superframe_count * N * L samples).
inline PcmSignal eavesdrop_stream(std::span<const std::uint8_t> stream) {
    detail::Cursor cur(stream);
    StreamHeader h = read_header(cur);
    std::size_t unit = static_cast<std::size_t>(h.sub_frame_len) * h.frames_per_super;
    std::size_t frames_per_record = unit / gsm0610::kFrameSamples;

    PcmSignal out;
    gsm0610::Decoder decoder;
    for (std::uint32_t s = 0; s < h.superframe_count; ++s) {
        cur.take(8);
        std::uint16_t ct_len = cur.u16();
        if (ct_len == 0 || ct_len % 8 != 0)
            throw BadHeader("table ciphertext length must be a positive multiple of 8");
        cur.take(ct_len);
        detail::decode_frames(cur, decoder, frames_per_record, out.samples);
    }
    return out;
}

namespace detail {

struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

} // namespace detail

// Crude stand-in for the radio channel: flips each codec-frame payload bit
// (the 260 bits after the magic nibble) independently with the given
// probability. The header, IVs and table ciphertexts are never corrupted.
inline std::vector<std::uint8_t> inject_bit_errors(std::span<const std::uint8_t> stream,
                                                   double bit_error_rate, std::uint64_t seed) {
    if (bit_error_rate < 0.0 || bit_error_rate > 1.0)
        throw Error("bit_error_rate must be in [0, 1]");

    detail::Cursor cur(stream);
    StreamHeader h = read_header(cur);
    std::size_t unit = static_cast<std::size_t>(h.sub_frame_len) * h.frames_per_super;
    std::size_t frames_per_record = unit / gsm0610::kFrameSamples;

    std::vector<std::uint8_t> out(stream.begin(), stream.end());
    detail::SplitMix64 rng(seed);

    std::size_t pos = kHeaderBytes;
    for (std::uint32_t s = 0; s < h.superframe_count; ++s) {
        cur.take(8);
        std::uint16_t ct_len = cur.u16();
        if (ct_len == 0 || ct_len % 8 != 0)
            throw BadHeader("table ciphertext length must be a positive multiple of 8");
        cur.take(ct_len);
        pos += 8u + 2u + ct_len;
        for (std::size_t f = 0; f < frames_per_record; ++f) {
            cur.take(gsm0610::kPackedFrameBytes);
            for (int bit = 4; bit < 4 + gsm0610::kPayloadBits; ++bit) {
                if (rng.next_unit() < bit_error_rate)
                    out[pos + static_cast<std::size_t>(bit >> 3)] ^=
                        static_cast<std::uint8_t>(0x80u >> (bit & 7));
            }
            pos += gsm0610::kPackedFrameBytes;
        }
    }
    return out;
}

} // namespace gvs::secure_stream

#endif
