// scrambler.hpp - keyed permutation + inversion of speech sub-frames.
//
// A super-frame of N sub-frames (L samples each) is rearranged by a
// permutation drawn from a keyed byte stream; each output sub-frame may
// additionally be inverted. The table is the per-super-frame secret; it is
// serialized to a fixed wire layout and DES-encrypted for transport.
#ifndef GVS_SCRAMBLER_HPP
#define GVS_SCRAMBLER_HPP

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gvs/errors.hpp"

namespace gvs::scrambler {

// Anything that yields an unbounded deterministic byte stream
// (des::Keystream in production, fixture vectors in tests).
template <typename S>
concept ByteSource = requires(S s) {
    { s.next() } -> std::convertible_to<std::uint8_t>;
};

struct ScrambleConfig {
    int sub_frame_len = 160;   // positive multiple of 160
    int frames_per_super = 16; // 1..256

    void validate() const {
        if (sub_frame_len <= 0 || sub_frame_len % 160 != 0)
            throw LengthMismatch("sub_frame_len must be a positive multiple of 160");
        if (frames_per_super < 1 || frames_per_super > 256)
            throw LengthMismatch("frames_per_super must be in [1,256]");
    }
};

// How a flagged sub-frame is inverted. Time reversal is the default: it
// keeps short-term spectral statistics speech-like so the scrambled signal
// still passes through a parametric vocoder. Sign flip negates samples
// modulo 2^16 (so -32768 maps to itself and the flip stays an involution).
enum class InversionMode { time_reverse, sign_flip };

// perm[i] = index of the source sub-frame placed at output position i.
struct PermutationTable {
    std::vector<std::uint8_t> perm;
    std::vector<bool> invert_flags;
    std::uint32_t superframe_index = 0; // bookkeeping, not part of identity

    std::size_t size() const { return perm.size(); }

    bool is_valid() const {
        std::size_t n = perm.size();
        if (n == 0 || n > 256 || invert_flags.size() != n) return false;
        std::array<bool, 256> seen{};
        for (std::uint8_t p : perm) {
            if (p >= n || seen[p]) return false;
            seen[p] = true;
        }
        return true;
    }

    friend bool operator==(const PermutationTable& a, const PermutationTable& b) {
        return a.perm == b.perm && a.invert_flags == b.invert_flags;
    }
};

// Fisher-Yates shuffle of the identity permutation, descending i from N-1
// to 1. Each swap partner is drawn by rejection sampling so every j in
// [0, i] is exactly equally likely: read a byte b, redraw while
// b >= 256 - (256 mod (i+1)), then j = b mod (i+1). The inversion flags
// follow as ceil(N/8) bytes, bit (k mod 8) of byte floor(k/8), LSB first.
template <ByteSource S>
PermutationTable generate_table(S&& stream, std::uint32_t superframe_index,
                                const ScrambleConfig& config) {
    config.validate();
    int n = config.frames_per_super;

    PermutationTable table;
    table.superframe_index = superframe_index;
    table.perm.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) table.perm[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);

    for (int i = n - 1; i >= 1; --i) {
        unsigned range = static_cast<unsigned>(i) + 1;
        unsigned limit = 256 - (256 % range);
        unsigned b;
        do {
            b = stream.next();
        } while (b >= limit);
        unsigned j = b % range;
        std::swap(table.perm[static_cast<std::size_t>(i)], table.perm[j]);
    }

    table.invert_flags.resize(static_cast<std::size_t>(n));
    int flag_bytes = (n + 7) / 8;
    for (int q = 0; q < flag_bytes; ++q) {
        std::uint8_t byte = stream.next();
        for (int bit = 0; bit < 8 && q * 8 + bit < n; ++bit)
            table.invert_flags[static_cast<std::size_t>(q * 8 + bit)] = (byte >> bit) & 1;
    }
    return table;
}

namespace detail {

inline std::int16_t flip_sign(std::int16_t v) {
    // modular negation: -(-32768) wraps back to -32768
    return static_cast<std::int16_t>(-static_cast<std::int32_t>(v));
}

inline void check_args(std::size_t len, const PermutationTable& table) {
    if (!table.is_valid()) throw NotAPermutation("invalid permutation table");
    if (table.size() == 0 || len % table.size() != 0)
        throw LengthMismatch("super-frame length is not a multiple of the sub-frame count");
}

} // namespace detail

// Output sub-frame i = input sub-frame perm[i], inverted when
// invert_flags[i] is set. Sample values are never altered by time reversal;
// sign flip negates them.
inline std::vector<std::int16_t> scramble(std::span<const std::int16_t> superframe,
                                          const PermutationTable& table,
                                          InversionMode mode = InversionMode::time_reverse) {
    detail::check_args(superframe.size(), table);
    std::size_t n = table.size();
    std::size_t sub_len = superframe.size() / n;
    std::vector<std::int16_t> out(superframe.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t* src = superframe.data() + table.perm[i] * sub_len;
        std::int16_t* dst = out.data() + i * sub_len;
        if (!table.invert_flags[i]) {
            std::copy(src, src + sub_len, dst);
        } else if (mode == InversionMode::time_reverse) {
            for (std::size_t k = 0; k < sub_len; ++k) dst[k] = src[sub_len - 1 - k];
        } else {
            for (std::size_t k = 0; k < sub_len; ++k) dst[k] = detail::flip_sign(src[k]);
        }
    }
    return out;
}

// Exact inverse of scramble with the same table and mode:
// output sub-frame perm[i] = input sub-frame i, un-inverted.
inline std::vector<std::int16_t> descramble(std::span<const std::int16_t> superframe,
                                            const PermutationTable& table,
                                            InversionMode mode = InversionMode::time_reverse) {
    detail::check_args(superframe.size(), table);
    std::size_t n = table.size();
    std::size_t sub_len = superframe.size() / n;
    std::vector<std::int16_t> out(superframe.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t* src = superframe.data() + i * sub_len;
        std::int16_t* dst = out.data() + table.perm[i] * sub_len;
        if (!table.invert_flags[i]) {
            std::copy(src, src + sub_len, dst);
        } else if (mode == InversionMode::time_reverse) {
            for (std::size_t k = 0; k < sub_len; ++k) dst[k] = src[sub_len - 1 - k];
        } else {
            for (std::size_t k = 0; k < sub_len; ++k) dst[k] = detail::flip_sign(src[k]);
        }
    }
    return out;
}

// Wire layout (bit-exact; this is the DES-CBC plaintext):
//   [version 0x01][byte N-1][N bytes perm[0..N-1]][ceil(N/8) flag bytes, LSB first]
inline constexpr std::uint8_t kTableVersion = 0x01;

inline std::vector<std::uint8_t> serialize_table(const PermutationTable& table) {
    if (!table.is_valid()) throw NotAPermutation("refusing to serialize an invalid table");
    std::size_t n = table.size();
    std::vector<std::uint8_t> out;
    out.reserve(2 + n + (n + 7) / 8);
    out.push_back(kTableVersion);
    out.push_back(static_cast<std::uint8_t>(n - 1));
    out.insert(out.end(), table.perm.begin(), table.perm.end());
    for (std::size_t q = 0; q < (n + 7) / 8; ++q) {
        std::uint8_t byte = 0;
        for (std::size_t bit = 0; bit < 8 && q * 8 + bit < n; ++bit)
            if (table.invert_flags[q * 8 + bit]) byte |= static_cast<std::uint8_t>(1u << bit);
        out.push_back(byte);
    }
    return out;
}

inline PermutationTable deserialize_table(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2) throw Truncated("table too short for header");
    if (bytes[0] != kTableVersion) throw BadVersion("unknown table version");
    std::size_t n = static_cast<std::size_t>(bytes[1]) + 1;
    std::size_t expect = 2 + n + (n + 7) / 8;
    if (bytes.size() != expect)
        throw Truncated("table length does not match its declared sub-frame count");

    PermutationTable table;
    table.perm.assign(bytes.begin() + 2, bytes.begin() + 2 + static_cast<std::ptrdiff_t>(n));
    table.invert_flags.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        table.invert_flags[k] = (bytes[2 + n + k / 8] >> (k % 8)) & 1;

    if (!table.is_valid())
        throw NotAPermutation("duplicate or out-of-range permutation index");
    return table;
}

} // namespace gvs::scrambler

#endif
