// des.hpp - DES block cipher (FIPS 46-3), CBC mode with PKCS#7 padding,
// and a deterministic counter keystream used to drive the scrambler.
#ifndef GVS_DES_HPP
#define GVS_DES_HPP

#include <array>
#include <cstdint>
#include <cstddef>
#include <span>
#include <vector>

#include "gvs/errors.hpp"

namespace gvs::des {

// 8 bytes, big-endian bit order: bit 1 of the standard's numbering is the
// most significant bit of byte 0.
using Block = std::array<std::uint8_t, 8>;

// 64-bit key, 56 effective bits. Parity bits (the LSB of each byte) are
// ignored, never validated.
struct Key {
    std::array<std::uint8_t, 8> bytes{};

    friend bool operator==(const Key&, const Key&) = default;
};

namespace detail {

// Tables transcribed from FIPS 46-3. Entries are 1-based bit positions
// counted from the MSB of the input.
inline constexpr std::uint8_t kIP[64] = {
    58, 50, 42, 34, 26, 18, 10, 2, 60, 52, 44, 36, 28, 20, 12, 4,
    62, 54, 46, 38, 30, 22, 14, 6, 64, 56, 48, 40, 32, 24, 16, 8,
    57, 49, 41, 33, 25, 17, 9,  1, 59, 51, 43, 35, 27, 19, 11, 3,
    61, 53, 45, 37, 29, 21, 13, 5, 63, 55, 47, 39, 31, 23, 15, 7};

inline constexpr std::uint8_t kFP[64] = {
    40, 8, 48, 16, 56, 24, 64, 32, 39, 7, 47, 15, 55, 23, 63, 31,
    38, 6, 46, 14, 54, 22, 62, 30, 37, 5, 45, 13, 53, 21, 61, 29,
    36, 4, 44, 12, 52, 20, 60, 28, 35, 3, 43, 11, 51, 19, 59, 27,
    34, 2, 42, 10, 50, 18, 58, 26, 33, 1, 41, 9,  49, 17, 57, 25};

inline constexpr std::uint8_t kE[48] = {
    32, 1,  2,  3,  4,  5,  4,  5,  6,  7,  8,  9,
    8,  9,  10, 11, 12, 13, 12, 13, 14, 15, 16, 17,
    16, 17, 18, 19, 20, 21, 20, 21, 22, 23, 24, 25,
    24, 25, 26, 27, 28, 29, 28, 29, 30, 31, 32, 1};

inline constexpr std::uint8_t kP[32] = {
    16, 7, 20, 21, 29, 12, 28, 17, 1,  15, 23, 26, 5,  18, 31, 10,
    2,  8, 24, 14, 32, 27, 3,  9,  19, 13, 30, 6,  22, 11, 4,  25};

inline constexpr std::uint8_t kPC1[56] = {
    57, 49, 41, 33, 25, 17, 9,  1,  58, 50, 42, 34, 26, 18,
    10, 2,  59, 51, 43, 35, 27, 19, 11, 3,  60, 52, 44, 36,
    63, 55, 47, 39, 31, 23, 15, 7,  62, 54, 46, 38, 30, 22,
    14, 6,  61, 53, 45, 37, 29, 21, 13, 5,  28, 20, 12, 4};

inline constexpr std::uint8_t kPC2[48] = {
    14, 17, 11, 24, 1,  5,  3,  28, 15, 6,  21, 10,
    23, 19, 12, 4,  26, 8,  16, 7,  27, 20, 13, 2,
    41, 52, 31, 37, 47, 55, 30, 40, 51, 45, 33, 48,
    44, 49, 39, 56, 34, 53, 46, 42, 50, 36, 29, 32};

inline constexpr std::uint8_t kShifts[16] = {1, 1, 2, 2, 2, 2, 2, 2,
                                             1, 2, 2, 2, 2, 2, 2, 1};

inline constexpr std::uint8_t kSBox[8][64] = {
    {14, 4,  13, 1, 2,  15, 11, 8,  3,  10, 6,  12, 5,  9,  0, 7,
     0,  15, 7,  4, 14, 2,  13, 1,  10, 6,  12, 11, 9,  5,  3, 8,
     4,  1,  14, 8, 13, 6,  2,  11, 15, 12, 9,  7,  3,  10, 5, 0,
     15, 12, 8,  2, 4,  9,  1,  7,  5,  11, 3,  14, 10, 0,  6, 13},
    {15, 1,  8,  14, 6,  11, 3,  4,  9,  7, 2,  13, 12, 0, 5,  10,
     3,  13, 4,  7,  15, 2,  8,  14, 12, 0, 1,  10, 6,  9, 11, 5,
     0,  14, 7,  11, 10, 4,  13, 1,  5,  8, 12, 6,  9,  3, 2,  15,
     13, 8,  10, 1,  3,  15, 4,  2,  11, 6, 7,  12, 0,  5, 14, 9},
    {10, 0,  9,  14, 6, 3,  15, 5,  1,  13, 12, 7,  11, 4,  2,  8,
     13, 7,  0,  9,  3, 4,  6,  10, 2,  8,  5,  14, 12, 11, 15, 1,
     13, 6,  4,  9,  8, 15, 3,  0,  11, 1,  2,  12, 5,  10, 14, 7,
     1,  10, 13, 0,  6, 9,  8,  7,  4,  15, 14, 3,  11, 5,  2,  12},
    {7,  13, 14, 3, 0,  6,  9, 10, 1,  2, 8, 5,  11, 12, 4,  15,
     13, 8,  11, 5, 6,  15, 0, 3,  4,  7, 2, 12, 1,  10, 14, 9,
     10, 6,  9,  0, 12, 11, 7, 13, 15, 1, 3, 14, 5,  2,  8,  4,
     3,  15, 0,  6, 10, 1,  13, 8, 9,  4, 5, 11, 12, 7,  2,  14},
    {2,  12, 4,  1,  7,  10, 11, 6,  8,  5,  3,  15, 13, 0, 14, 9,
     14, 11, 2,  12, 4,  7,  13, 1,  5,  0,  15, 10, 3,  9, 8,  6,
     4,  2,  1,  11, 10, 13, 7,  8,  15, 9,  12, 5,  6,  3, 0,  14,
     11, 8,  12, 7,  1,  14, 2,  13, 6,  15, 0,  9,  10, 4, 5,  3},
    {12, 1,  10, 15, 9, 2,  6,  8,  0,  13, 3,  4,  14, 7,  5,  11,
     10, 15, 4,  2,  7, 12, 9,  5,  6,  1,  13, 14, 0,  11, 3,  8,
     9,  14, 15, 5,  2, 8,  12, 3,  7,  0,  4,  10, 1,  13, 11, 6,
     4,  3,  2,  12, 9, 5,  15, 10, 11, 14, 1,  7,  6,  0,  8,  13},
    {4,  11, 2,  14, 15, 0, 8,  13, 3,  12, 9, 7,  5,  10, 6, 1,
     13, 0,  11, 7,  4,  9, 1,  10, 14, 3,  5, 12, 2,  15, 8, 6,
     1,  4,  11, 13, 12, 3, 7,  14, 10, 15, 6, 8,  0,  5,  9, 2,
     6,  11, 13, 8,  1,  4, 10, 7,  9,  5,  0, 15, 14, 2,  3, 12},
    {13, 2,  8,  4, 6,  15, 11, 1,  10, 9,  3,  14, 5,  0,  12, 7,
     1,  15, 13, 8, 10, 3,  7,  4,  12, 5,  6,  11, 0,  14, 9,  2,
     7,  11, 4,  1, 9,  12, 14, 2,  0,  6,  10, 13, 15, 3,  5,  8,
     2,  1,  14, 7, 4,  10, 8,  13, 15, 12, 9,  0,  3,  5,  6,  11}};

constexpr std::uint64_t permute_bits(std::uint64_t v, int width,
                                     const std::uint8_t* table, int n) {
    std::uint64_t out = 0;
    for (int i = 0; i < n; ++i)
        out = (out << 1) | ((v >> (width - table[i])) & 1u);
    return out;
}

constexpr std::uint32_t feistel(std::uint32_t r, std::uint64_t subkey) {
    std::uint64_t x = permute_bits(r, 32, kE, 48) ^ subkey;
    std::uint32_t s = 0;
    for (int i = 0; i < 8; ++i) {
        unsigned six = (x >> (42 - 6 * i)) & 0x3Fu;
        unsigned row = ((six >> 4) & 2u) | (six & 1u);
        unsigned col = (six >> 1) & 0xFu;
        s = (s << 4) | kSBox[i][row * 16 + col];
    }
    return static_cast<std::uint32_t>(permute_bits(s, 32, kP, 32));
}

constexpr std::uint64_t to_u64(const Block& b) {
    std::uint64_t v = 0;
    for (auto byte : b) v = (v << 8) | byte;
    return v;
}

constexpr Block to_block(std::uint64_t v) {
    Block b{};
    for (int i = 7; i >= 0; --i) {
        b[i] = static_cast<std::uint8_t>(v & 0xFF);
        v >>= 8;
    }
    return b;
}

} // namespace detail

// The 16 48-bit round keys (PC-1, the per-round left rotations
// 1,1,2,2,2,2,2,2,1,2,2,2,2,2,2,1, then PC-2). Immutable once built.
class KeySchedule {
public:
    explicit KeySchedule(const Key& key) {
        using namespace detail;
        std::uint64_t k56 = permute_bits(to_u64(key.bytes), 64, kPC1, 56);
        std::uint32_t c = static_cast<std::uint32_t>(k56 >> 28) & 0x0FFFFFFFu;
        std::uint32_t d = static_cast<std::uint32_t>(k56) & 0x0FFFFFFFu;
        for (int r = 0; r < 16; ++r) {
            int s = kShifts[r];
            c = ((c << s) | (c >> (28 - s))) & 0x0FFFFFFFu;
            d = ((d << s) | (d >> (28 - s))) & 0x0FFFFFFFu;
            std::uint64_t cd = (static_cast<std::uint64_t>(c) << 28) | d;
            subkeys_[r] = permute_bits(cd, 56, kPC2, 48);
        }
    }

    std::uint64_t round_key(int r) const { return subkeys_[r]; }

    std::uint64_t encrypt(std::uint64_t block) const { return run(block, false); }
    std::uint64_t decrypt(std::uint64_t block) const { return run(block, true); }

private:
    std::uint64_t run(std::uint64_t block, bool reverse) const {
        using namespace detail;
        std::uint64_t v = permute_bits(block, 64, kIP, 64);
        std::uint32_t l = static_cast<std::uint32_t>(v >> 32);
        std::uint32_t r = static_cast<std::uint32_t>(v);
        for (int i = 0; i < 16; ++i) {
            std::uint64_t k = subkeys_[reverse ? 15 - i : i];
            std::uint32_t next = l ^ feistel(r, k);
            l = r;
            r = next;
        }
        // final swap, then the inverse initial permutation
        std::uint64_t pre = (static_cast<std::uint64_t>(r) << 32) | l;
        return permute_bits(pre, 64, kFP, 64);
    }

    std::array<std::uint64_t, 16> subkeys_{};
};

inline Block encrypt_block(const KeySchedule& ks, const Block& block) {
    return detail::to_block(ks.encrypt(detail::to_u64(block)));
}

inline Block decrypt_block(const KeySchedule& ks, const Block& block) {
    return detail::to_block(ks.decrypt(detail::to_u64(block)));
}

inline Block encrypt_block(const Key& key, const Block& block) {
    return encrypt_block(KeySchedule(key), block);
}

inline Block decrypt_block(const Key& key, const Block& block) {
    return decrypt_block(KeySchedule(key), block);
}

// CBC with PKCS#7. A full pad block is appended when the plaintext is
// already a multiple of 8 bytes, so unpadding is never ambiguous.
inline std::vector<std::uint8_t> cbc_encrypt(const Key& key, const Block& iv,
                                             std::span<const std::uint8_t> plaintext) {
    KeySchedule ks(key);
    std::size_t pad = 8 - plaintext.size() % 8;
    std::vector<std::uint8_t> out(plaintext.size() + pad);
    std::uint64_t prev = detail::to_u64(iv);
    for (std::size_t off = 0; off < out.size(); off += 8) {
        std::uint64_t blk = 0;
        for (std::size_t i = 0; i < 8; ++i) {
            std::uint8_t byte = off + i < plaintext.size()
                                    ? plaintext[off + i]
                                    : static_cast<std::uint8_t>(pad);
            blk = (blk << 8) | byte;
        }
        prev = ks.encrypt(blk ^ prev);
        Block cb = detail::to_block(prev);
        std::copy(cb.begin(), cb.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
    }
    return out;
}

inline std::vector<std::uint8_t> cbc_decrypt(const Key& key, const Block& iv,
                                             std::span<const std::uint8_t> ciphertext) {
    if (ciphertext.empty() || ciphertext.size() % 8 != 0)
        throw BadLength("DES-CBC ciphertext length must be a positive multiple of 8");
    KeySchedule ks(key);
    std::vector<std::uint8_t> out(ciphertext.size());
    std::uint64_t prev = detail::to_u64(iv);
    for (std::size_t off = 0; off < ciphertext.size(); off += 8) {
        std::uint64_t ct = 0;
        for (std::size_t i = 0; i < 8; ++i) ct = (ct << 8) | ciphertext[off + i];
        Block pt = detail::to_block(ks.decrypt(ct) ^ prev);
        std::copy(pt.begin(), pt.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
        prev = ct;
    }
    std::uint8_t pad = out.back();
    if (pad < 1 || pad > 8) throw BadPadding("bad PKCS#7 pad value");
    for (std::size_t i = out.size() - pad; i < out.size(); ++i)
        if (out[i] != pad) throw BadPadding("inconsistent PKCS#7 padding");
    out.resize(out.size() - pad);
    return out;
}

// Deterministic counter keystream: byte stream of
// encrypt(key, BE64(superframe_index * 2^32 + j)) for j = 0, 1, 2, ...
// consumed most significant byte first. Distinct super-frames use disjoint
// counter ranges.
class Keystream {
public:
    Keystream(const Key& key, std::uint32_t superframe_index)
        : ks_(key), base_(static_cast<std::uint64_t>(superframe_index) << 32) {}

    std::uint8_t next() {
        if (pos_ == 8) {
            buf_ = detail::to_block(ks_.encrypt(base_ | block_index_++));
            pos_ = 0;
        }
        return buf_[pos_++];
    }

private:
    KeySchedule ks_;
    std::uint64_t base_;
    std::uint32_t block_index_ = 0;
    Block buf_{};
    int pos_ = 8;
};

} // namespace gvs::des

#endif
