// gsm0610.hpp - GSM 06.10 full-rate RPE-LTP speech codec.
//
// 160-sample (20 ms) frames of 8 kHz PCM in, 76 quantized parameters
// (260 bits) out, and the reverse. All arithmetic follows the standard's
// saturating 16/32-bit fixed-point definitions so results are identical
// across platforms. Packed frames use the common 33-byte file convention
// with a leading 0xD magic nibble.
#ifndef GVS_GSM0610_HPP
#define GVS_GSM0610_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>

#include "gvs/errors.hpp"

namespace gvs::gsm0610 {

inline constexpr int kFrameSamples = 160;
inline constexpr int kSubframeSamples = 40;
inline constexpr int kPackedFrameBytes = 33;
inline constexpr int kPayloadBits = 260;
inline constexpr unsigned kFrameMagic = 0xD;

// ---------------------------------------------------------------------------
// Saturating fixed-point primitives (GSM 06.10 section 3.1).
// ---------------------------------------------------------------------------
namespace fx {

using Word = std::int16_t;
using LongWord = std::int32_t;

inline constexpr Word kMinW = -32768;
inline constexpr Word kMaxW = 32767;

constexpr LongWord sasr(LongWord x, int n) { return x >> n; }

constexpr Word saturate(LongWord x) {
    return x < kMinW ? kMinW : (x > kMaxW ? kMaxW : static_cast<Word>(x));
}

constexpr Word add(Word a, Word b) {
    return saturate(static_cast<LongWord>(a) + b);
}

constexpr Word sub(Word a, Word b) {
    return saturate(static_cast<LongWord>(a) - b);
}

constexpr Word mult(Word a, Word b) {
    if (a == kMinW && b == kMinW) return kMaxW;
    return static_cast<Word>(sasr(static_cast<LongWord>(a) * b, 15));
}

constexpr Word mult_r(Word a, Word b) {
    if (a == kMinW && b == kMinW) return kMaxW;
    return static_cast<Word>(sasr(static_cast<LongWord>(a) * b + 16384, 15));
}

constexpr Word w_abs(Word a) { return a < 0 ? (a == kMinW ? kMaxW : static_cast<Word>(-a)) : a; }

constexpr LongWord l_add(LongWord a, LongWord b) {
    std::int64_t s = static_cast<std::int64_t>(a) + b;
    if (s < -2147483648LL) return -2147483647 - 1;
    if (s > 2147483647LL) return 2147483647;
    return static_cast<LongWord>(s);
}

// left shifts reproduce the reference implementation's 16/32-bit truncation
constexpr Word wrap_w(LongWord x) { return static_cast<Word>(static_cast<std::uint16_t>(x)); }
constexpr LongWord wrap_l(std::int64_t x) {
    return static_cast<LongWord>(static_cast<std::uint64_t>(x));
}

// shifts needed to normalize a 32-bit value to [2^30, 2^31)
constexpr int norm(LongWord a) {
    if (a < 0) {
        if (a <= -1073741824) return 0;
        a = ~a;
    }
    if (a == 0) return 31;
    int n = 0;
    while (!(a & 0x40000000)) {
        a = wrap_l(static_cast<std::int64_t>(a) << 1);
        ++n;
    }
    return n;
}

// 15-bit fractional division, 0 <= num <= denum
constexpr Word div(Word num, Word denum) {
    if (num == 0) return 0;
    LongWord l_num = num;
    LongWord l_denum = denum;
    Word d = 0;
    for (int k = 0; k < 15; ++k) {
        d = static_cast<Word>(d << 1);
        l_num <<= 1;
        if (l_num >= l_denum) {
            l_num -= l_denum;
            ++d;
        }
    }
    return d;
}

constexpr Word asr(Word a, int n);

constexpr Word asl(Word a, int n) {
    if (n >= 16) return 0;
    if (n <= -16) return static_cast<Word>(-(a < 0));
    if (n < 0) return asr(a, -n);
    return wrap_w(static_cast<LongWord>(a) << n);
}

constexpr Word asr(Word a, int n) {
    if (n >= 16) return static_cast<Word>(-(a < 0));
    if (n <= -16) return 0;
    if (n < 0) return asl(a, -n);
    return static_cast<Word>(a >> n);
}

} // namespace fx

// ---------------------------------------------------------------------------
// Quantizer tables (GSM 06.10 tables 4.1-4.6).
// ---------------------------------------------------------------------------
namespace tables {

inline constexpr fx::Word kLarA[8]   = {20480, 20480, 20480, 20480, 13964, 15360, 8534, 9036};
inline constexpr fx::Word kLarB[8]   = {0, 0, 2048, -2560, 94, -1792, -341, -1144};
inline constexpr fx::Word kLarMac[8] = {31, 31, 15, 15, 7, 7, 3, 3};
inline constexpr fx::Word kLarMic[8] = {-32, -32, -16, -16, -8, -8, -4, -4};
inline constexpr fx::Word kLarInvA[8] = {13107, 13107, 13107, 13107, 19223, 17476, 31454, 29708};

inline constexpr fx::Word kDlb[4] = {6554, 16384, 26214, 32767};  // LTP gain decision levels
inline constexpr fx::Word kQlb[4] = {3277, 11469, 21845, 32767};  // dequantized LTP gains

inline constexpr fx::Word kNrfac[8] = {29128, 26215, 23832, 21846, 20165, 18725, 17476, 16384};
inline constexpr fx::Word kFac[8]   = {18431, 20479, 22527, 24575, 26623, 28671, 30719, 32767};

inline constexpr int kLarBits[8] = {6, 6, 5, 5, 4, 4, 3, 3};

} // namespace tables

// ---------------------------------------------------------------------------
// Frame parameters.
// ---------------------------------------------------------------------------

struct SubframeParams {
    std::uint8_t ltp_lag = 0;      // 7 bits; encoder emits [40,120]
    std::uint8_t ltp_gain = 0;     // 2 bits
    std::uint8_t grid_position = 0; // 2 bits
    std::uint8_t block_max = 0;    // 6 bits
    std::array<std::uint8_t, 13> rpe_pulses{}; // 3 bits each

    friend bool operator==(const SubframeParams&, const SubframeParams&) = default;
};

struct CodecFrame {
    std::array<std::uint8_t, 8> lar_codes{}; // bit widths 6,6,5,5,4,4,3,3
    std::array<SubframeParams, 4> sub{};

    bool is_valid() const {
        for (int i = 0; i < 8; ++i)
            if (lar_codes[static_cast<std::size_t>(i)] >= (1u << tables::kLarBits[i])) return false;
        for (const auto& s : sub) {
            if (s.ltp_lag >= 128 || s.ltp_gain >= 4 || s.grid_position >= 4 ||
                s.block_max >= 64)
                return false;
            for (auto p : s.rpe_pulses)
                if (p >= 8) return false;
        }
        return true;
    }

    friend bool operator==(const CodecFrame&, const CodecFrame&) = default;
};

// ---------------------------------------------------------------------------
// Shared analysis / synthesis pieces.
// ---------------------------------------------------------------------------
namespace detail {

using fx::LongWord;
using fx::Word;

// 4.2.4: autocorrelation with dynamic scaling. Scales s down, accumulates
// L_ACF[0..8], then shifts s back up (the reference implementation loses the
// rounded low bits here on loud frames; we reproduce that).
inline void autocorrelation(std::array<Word, kFrameSamples>& s,
                            std::array<LongWord, 9>& l_acf) {
    Word smax = 0;
    for (Word v : s) smax = std::max(smax, fx::w_abs(v));

    int scalauto = 0;
    if (smax > 0) scalauto = 4 - fx::norm(static_cast<LongWord>(smax) << 16);

    if (scalauto > 0) {
        Word scale = static_cast<Word>(16384 >> (scalauto - 1));
        for (Word& v : s) v = fx::mult_r(v, scale);
    }

    for (int k = 0; k <= 8; ++k) {
        std::int64_t acc = 0;
        for (int i = k; i < kFrameSamples; ++i)
            acc += static_cast<LongWord>(s[static_cast<std::size_t>(i)]) *
                   s[static_cast<std::size_t>(i - k)];
        l_acf[static_cast<std::size_t>(k)] = fx::wrap_l(acc << 1);
    }

    if (scalauto > 0)
        for (Word& v : s) v = fx::wrap_w(static_cast<LongWord>(v) << scalauto);
}

// 4.2.5: Schur recursion, 8 reflection coefficients.
inline void reflection_coefficients(const std::array<LongWord, 9>& l_acf,
                                    std::array<Word, 8>& r) {
    if (l_acf[0] == 0) {
        r.fill(0);
        return;
    }

    int shift = fx::norm(l_acf[0]);
    std::array<Word, 9> acf{};
    for (int i = 0; i <= 8; ++i)
        acf[static_cast<std::size_t>(i)] = static_cast<Word>(
            fx::sasr(fx::wrap_l(static_cast<std::int64_t>(l_acf[static_cast<std::size_t>(i)]) << shift), 16));

    std::array<Word, 9> k{};
    std::array<Word, 9> p{};
    for (int i = 1; i <= 7; ++i) k[static_cast<std::size_t>(8 - i)] = acf[static_cast<std::size_t>(i)];
    for (int i = 0; i <= 8; ++i) p[static_cast<std::size_t>(i)] = acf[static_cast<std::size_t>(i)];

    for (int n = 1; n <= 8; ++n) {
        Word& rn = r[static_cast<std::size_t>(n - 1)];
        Word temp = fx::w_abs(p[1]);
        if (p[0] < temp) {
            for (int i = n; i <= 8; ++i) r[static_cast<std::size_t>(i - 1)] = 0;
            return;
        }
        rn = fx::div(temp, p[0]);
        if (p[1] > 0) rn = static_cast<Word>(-rn);
        if (n == 8) return;

        p[0] = fx::add(p[0], fx::mult_r(p[1], rn));
        for (int m = 1; m <= 8 - n; ++m) {
            p[static_cast<std::size_t>(m)] =
                fx::add(p[static_cast<std::size_t>(m + 1)], fx::mult_r(k[static_cast<std::size_t>(m)], rn));
            k[static_cast<std::size_t>(m)] =
                fx::add(k[static_cast<std::size_t>(m)], fx::mult_r(p[static_cast<std::size_t>(m + 1)], rn));
        }
    }
}

// 4.2.6: piecewise-linear reflection-to-LAR transformation, in place.
inline void transform_to_lar(std::array<Word, 8>& r) {
    for (Word& v : r) {
        Word temp = fx::w_abs(v);
        if (temp < 22118) {
            temp = static_cast<Word>(temp >> 1);
        } else if (temp < 31130) {
            temp = static_cast<Word>(temp - 11059);
        } else {
            temp = fx::wrap_w(static_cast<LongWord>(temp - 26112) << 2);
        }
        v = (v < 0) ? static_cast<Word>(-temp) : temp;
    }
}

// 4.2.7: quantize LARs to the 6/6/5/5/4/4/3/3-bit codes.
inline void quantize_lar(const std::array<Word, 8>& lar, std::array<std::uint8_t, 8>& codes) {
    for (int i = 0; i < 8; ++i) {
        Word temp = fx::mult(tables::kLarA[i], lar[static_cast<std::size_t>(i)]);
        temp = fx::add(temp, tables::kLarB[i]);
        temp = fx::add(temp, 256);
        temp = static_cast<Word>(fx::sasr(temp, 9));
        Word code;
        if (temp > tables::kLarMac[i])
            code = static_cast<Word>(tables::kLarMac[i] - tables::kLarMic[i]);
        else if (temp < tables::kLarMic[i])
            code = 0;
        else
            code = static_cast<Word>(temp - tables::kLarMic[i]);
        codes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(code);
    }
}

// 4.3.1 (also used by the encoder's local decoder): codes back to LARpp.
inline void decode_lar(const std::array<std::uint8_t, 8>& codes, std::array<Word, 8>& larpp) {
    for (int i = 0; i < 8; ++i) {
        Word temp1 = fx::wrap_w(
            static_cast<LongWord>(fx::add(static_cast<Word>(codes[static_cast<std::size_t>(i)]),
                                          tables::kLarMic[i]))
            << 10);
        temp1 = fx::sub(temp1, static_cast<Word>(tables::kLarB[i] * 2));
        temp1 = fx::mult_r(tables::kLarInvA[i], temp1);
        larpp[static_cast<std::size_t>(i)] = fx::add(temp1, temp1);
    }
}

// 4.2.9.1: the four interpolation zones between old and new LARs.
inline void interpolate_lar(const std::array<Word, 8>& prev, const std::array<Word, 8>& cur,
                            int zone, std::array<Word, 8>& larp) {
    for (int i = 0; i < 8; ++i) {
        Word o = prev[static_cast<std::size_t>(i)];
        Word n = cur[static_cast<std::size_t>(i)];
        Word v;
        switch (zone) {
            case 0:
                v = fx::add(static_cast<Word>(fx::sasr(o, 2)), static_cast<Word>(fx::sasr(n, 2)));
                v = fx::add(v, static_cast<Word>(fx::sasr(o, 1)));
                break;
            case 1:
                v = fx::add(static_cast<Word>(fx::sasr(o, 1)), static_cast<Word>(fx::sasr(n, 1)));
                break;
            case 2:
                v = fx::add(static_cast<Word>(fx::sasr(o, 2)), static_cast<Word>(fx::sasr(n, 2)));
                v = fx::add(v, static_cast<Word>(fx::sasr(n, 1)));
                break;
            default:
                v = n;
                break;
        }
        larp[static_cast<std::size_t>(i)] = v;
    }
}

// 4.2.9.2: LARp to reflection coefficients, in place.
inline void larp_to_rp(std::array<Word, 8>& larp) {
    for (Word& v : larp) {
        Word temp;
        if (v < 0) {
            temp = (v == fx::kMinW) ? fx::kMaxW : static_cast<Word>(-v);
            if (temp < 11059)
                temp = static_cast<Word>(temp << 1);
            else if (temp < 20070)
                temp = static_cast<Word>(temp + 11059);
            else
                temp = fx::add(static_cast<Word>(temp >> 2), 26112);
            v = static_cast<Word>(-temp);
        } else {
            temp = v;
            if (temp < 11059)
                temp = static_cast<Word>(temp << 1);
            else if (temp < 20070)
                temp = static_cast<Word>(temp + 11059);
            else
                temp = fx::add(static_cast<Word>(temp >> 2), 26112);
            v = temp;
        }
    }
}

// 4.2.10: short-term analysis lattice over one zone, in place.
inline void short_term_analysis_filtering(std::array<Word, 8>& u, const std::array<Word, 8>& rp,
                                          Word* s, int count) {
    for (; count--; ++s) {
        Word di = *s;
        Word sav = di;
        for (int i = 0; i < 8; ++i) {
            Word ui = u[static_cast<std::size_t>(i)];
            Word rpi = rp[static_cast<std::size_t>(i)];
            u[static_cast<std::size_t>(i)] = sav;
            sav = fx::add(ui, fx::mult_r(rpi, di));
            di = fx::add(di, fx::mult_r(rpi, ui));
        }
        *s = di;
    }
}

// 4.3.4: short-term synthesis lattice over one zone.
inline void short_term_synthesis_filtering(std::array<Word, 9>& v, const std::array<Word, 8>& rrp,
                                           const Word* wt, Word* sr, int count) {
    for (; count--; ++wt, ++sr) {
        Word sri = *wt;
        for (int i = 7; i >= 0; --i) {
            Word rrpi = rrp[static_cast<std::size_t>(i)];
            sri = fx::sub(sri, fx::mult_r(rrpi, v[static_cast<std::size_t>(i)]));
            v[static_cast<std::size_t>(i + 1)] = fx::add(v[static_cast<std::size_t>(i)], fx::mult_r(rrpi, sri));
        }
        *sr = v[0] = sri;
    }
}

// 4.2.11: LTP lag search over [40,120] plus 2-bit gain coding.
inline void ltp_parameters(const Word* d, const Word* dp, std::uint8_t& lag_out,
                           std::uint8_t& gain_out) {
    Word dmax = 0;
    for (int k = 0; k < 40; ++k) dmax = std::max(dmax, fx::w_abs(d[k]));

    int scal = 0;
    if (dmax != 0) {
        int temp = fx::norm(static_cast<LongWord>(dmax) << 16);
        scal = temp > 6 ? 0 : 6 - temp;
    }

    std::array<Word, 40> wt{};
    for (int k = 0; k < 40; ++k) wt[static_cast<std::size_t>(k)] = static_cast<Word>(fx::sasr(d[k], scal));

    LongWord l_max = 0;
    int nc = 40;
    for (int lambda = 40; lambda <= 120; ++lambda) {
        LongWord acc = 0;
        for (int k = 0; k < 40; ++k)
            acc += static_cast<LongWord>(wt[static_cast<std::size_t>(k)]) * dp[k - lambda];
        if (acc > l_max) {
            l_max = acc;
            nc = lambda;
        }
    }
    lag_out = static_cast<std::uint8_t>(nc);

    l_max = fx::wrap_l(static_cast<std::int64_t>(l_max) << 1);
    l_max >>= (6 - scal);

    LongWord l_power = 0;
    for (int k = 0; k < 40; ++k) {
        LongWord t = fx::sasr(dp[k - nc], 3);
        l_power += t * t;
    }
    l_power = fx::wrap_l(static_cast<std::int64_t>(l_power) << 1);

    if (l_max <= 0) {
        gain_out = 0;
        return;
    }
    if (l_max >= l_power) {
        gain_out = 3;
        return;
    }

    int shift = fx::norm(l_power);
    Word r = static_cast<Word>(fx::sasr(fx::wrap_l(static_cast<std::int64_t>(l_max) << shift), 16));
    Word s = static_cast<Word>(fx::sasr(fx::wrap_l(static_cast<std::int64_t>(l_power) << shift), 16));

    std::uint8_t bc = 3;
    for (std::uint8_t i = 0; i <= 2; ++i) {
        if (r <= fx::mult(s, tables::kDlb[i])) {
            bc = i;
            break;
        }
    }
    gain_out = bc;
}

// 4.2.12: long-term analysis filtering; also produces the predicted signal
// dpp needed for the reconstructed residual.
inline void ltp_filtering(std::uint8_t bc, int nc, const Word* dp, const Word* d, Word* dpp,
                          Word* e) {
    Word bp = tables::kQlb[bc];
    for (int k = 0; k < 40; ++k) {
        dpp[k] = fx::mult_r(bp, dp[k - nc]);
        e[k] = fx::sub(d[k], dpp[k]);
    }
}

// 4.2.13: RPE weighting filter H(z), block of 40 with implicit zero padding.
inline void weighting_filter(const Word* e, std::array<Word, 40>& x) {
    static constexpr LongWord h[11] = {-134, -374, 0, 2054, 5741, 8192, 5741, 2054, 0, -374, -134};
    for (int k = 0; k < 40; ++k) {
        std::int64_t acc = 8192 >> 1;
        for (int i = 0; i <= 10; ++i) {
            int idx = k + i - 5;
            if (idx >= 0 && idx < 40) acc += h[i] * e[idx];
        }
        acc = fx::sasr(fx::wrap_l(acc), 13);
        x[static_cast<std::size_t>(k)] = fx::saturate(static_cast<LongWord>(acc));
    }
}

// 4.2.14: pick the 3:1 decimation grid with the most energy.
inline std::uint8_t rpe_grid_selection(const std::array<Word, 40>& x, std::array<Word, 13>& xm) {
    LongWord em = 0;
    std::uint8_t mc = 0;
    for (std::uint8_t m = 0; m < 4; ++m) {
        LongWord acc = 0;
        for (int i = 0; i < 13; ++i) {
            Word t = static_cast<Word>(fx::sasr(x[static_cast<std::size_t>(m + 3 * i)], 2));
            acc += 2 * static_cast<LongWord>(t) * t;
        }
        if (acc > em) {
            em = acc;
            mc = m;
        }
    }
    for (int i = 0; i < 13; ++i) xm[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(mc + 3 * i)];
    return mc;
}

// 4.2.15: split a coded block maximum back into exponent and mantissa.
inline void xmaxc_to_exp_mant(std::uint8_t xmaxc, Word& exp, Word& mant) {
    exp = 0;
    if (xmaxc > 15) exp = static_cast<Word>(fx::sasr(xmaxc, 3) - 1);
    mant = static_cast<Word>(xmaxc - (exp << 3));
    if (mant == 0) {
        exp = -4;
        mant = 7;
    } else {
        while (mant <= 7) {
            mant = static_cast<Word>(mant << 1 | 1);
            --exp;
        }
        mant = static_cast<Word>(mant - 8);
    }
}

// 4.2.15-4.2.16: APCM quantization of the 13 pulses.
inline void apcm_quantization(const std::array<Word, 13>& xm, std::array<std::uint8_t, 13>& xmc,
                              std::uint8_t& xmaxc_out, Word& exp_out, Word& mant_out) {
    Word xmax = 0;
    for (Word v : xm) xmax = std::max(xmax, fx::w_abs(v));

    Word exp = 0;
    Word temp = static_cast<Word>(fx::sasr(xmax, 9));
    Word itest = 0;
    for (int i = 0; i <= 5; ++i) {
        itest = static_cast<Word>(itest | (temp <= 0));
        temp = static_cast<Word>(fx::sasr(temp, 1));
        if (itest == 0) ++exp;
    }
    std::uint8_t xmaxc = static_cast<std::uint8_t>(
        fx::add(static_cast<Word>(fx::sasr(xmax, exp + 5)), static_cast<Word>(exp << 3)));

    Word dexp, dmant;
    xmaxc_to_exp_mant(xmaxc, dexp, dmant);

    Word temp1 = static_cast<Word>(6 - dexp);
    Word temp2 = tables::kNrfac[dmant];
    for (int i = 0; i < 13; ++i) {
        Word t = fx::wrap_w(static_cast<LongWord>(xm[static_cast<std::size_t>(i)]) << temp1);
        t = fx::mult(t, temp2);
        t = static_cast<Word>(fx::sasr(t, 12));
        xmc[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(t + 4);
    }
    xmaxc_out = xmaxc;
    exp_out = dexp;
    mant_out = dmant;
}

// 4.2.17: APCM inverse quantization.
inline void apcm_inverse_quantization(const std::array<std::uint8_t, 13>& xmc, Word exp, Word mant,
                                      std::array<Word, 13>& xmp) {
    Word temp1 = tables::kFac[mant];
    Word temp2 = fx::sub(6, exp);
    Word temp3 = fx::asl(1, static_cast<Word>(fx::sub(temp2, 1)));

    for (int i = 0; i < 13; ++i) {
        Word temp = static_cast<Word>((xmc[static_cast<std::size_t>(i)] << 1) - 7);
        temp = static_cast<Word>(temp << 12);
        temp = fx::mult_r(temp1, temp);
        temp = fx::add(temp, temp3);
        xmp[static_cast<std::size_t>(i)] = fx::asr(temp, temp2);
    }
}

// 4.2.18: place the 13 pulses back on their grid.
inline void rpe_grid_positioning(std::uint8_t mc, const std::array<Word, 13>& xmp, Word* ep) {
    for (int k = 0; k < 40; ++k) ep[k] = 0;
    for (int i = 0; i < 13; ++i) ep[mc + 3 * i] = xmp[static_cast<std::size_t>(i)];
}

} // namespace detail

// ---------------------------------------------------------------------------
// Frame packing: 0xD magic nibble, then the 260 bits in parameter order,
// most significant bit first. Always exactly 33 bytes.
// ---------------------------------------------------------------------------
namespace detail {

class BitWriter {
public:
    explicit BitWriter(std::uint8_t* out) : out_(out) {}
    void put(unsigned value, int bits) {
        for (int i = bits - 1; i >= 0; --i) {
            out_[pos_ >> 3] = static_cast<std::uint8_t>(
                (out_[pos_ >> 3] << 1) | ((value >> i) & 1u));
            ++pos_;
        }
    }
private:
    std::uint8_t* out_;
    int pos_ = 0;
};

class BitReader {
public:
    explicit BitReader(const std::uint8_t* in) : in_(in) {}
    unsigned get(int bits) {
        unsigned v = 0;
        for (int i = 0; i < bits; ++i) {
            v = (v << 1) | ((in_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u);
            ++pos_;
        }
        return v;
    }
private:
    const std::uint8_t* in_;
    int pos_ = 0;
};

} // namespace detail

inline std::array<std::uint8_t, kPackedFrameBytes> pack_frame(const CodecFrame& frame) {
    if (!frame.is_valid()) throw InvalidFrame("frame field out of range");
    std::array<std::uint8_t, kPackedFrameBytes> out{};
    detail::BitWriter w(out.data());
    w.put(kFrameMagic, 4);
    for (int i = 0; i < 8; ++i)
        w.put(frame.lar_codes[static_cast<std::size_t>(i)], tables::kLarBits[i]);
    for (const auto& s : frame.sub) {
        w.put(s.ltp_lag, 7);
        w.put(s.ltp_gain, 2);
        w.put(s.grid_position, 2);
        w.put(s.block_max, 6);
        for (auto p : s.rpe_pulses) w.put(p, 3);
    }
    return out;
}

inline CodecFrame unpack_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kPackedFrameBytes)
        throw LengthMismatch("packed frame must be exactly 33 bytes");
    detail::BitReader r(bytes.data());
    if (r.get(4) != kFrameMagic) throw BadMagic("missing 0xD frame magic");
    CodecFrame frame;
    for (int i = 0; i < 8; ++i)
        frame.lar_codes[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(r.get(tables::kLarBits[i]));
    for (auto& s : frame.sub) {
        s.ltp_lag = static_cast<std::uint8_t>(r.get(7));
        s.ltp_gain = static_cast<std::uint8_t>(r.get(2));
        s.grid_position = static_cast<std::uint8_t>(r.get(2));
        s.block_max = static_cast<std::uint8_t>(r.get(6));
        for (auto& p : s.rpe_pulses) p = static_cast<std::uint8_t>(r.get(3));
    }
    return frame;
}

// ---------------------------------------------------------------------------
// LPC analysis (4.2.4-4.2.7), exposed both as a pure frame-level operation
// and as the in-place step the encoder chain uses.
// ---------------------------------------------------------------------------
namespace detail {

inline std::array<std::uint8_t, 8> lpc_analysis_inplace(std::array<Word, kFrameSamples>& s) {
    std::array<LongWord, 9> l_acf{};
    autocorrelation(s, l_acf);
    std::array<Word, 8> r{};
    reflection_coefficients(l_acf, r);
    transform_to_lar(r);
    std::array<std::uint8_t, 8> codes{};
    quantize_lar(r, codes);
    return codes;
}

} // namespace detail

inline std::array<std::uint8_t, 8> lpc_analysis(std::span<const std::int16_t> frame) {
    if (frame.size() != kFrameSamples)
        throw LengthMismatch("lpc_analysis needs exactly 160 samples");
    std::array<fx::Word, kFrameSamples> s{};
    std::copy(frame.begin(), frame.end(), s.begin());
    return detail::lpc_analysis_inplace(s);
}

// Dequantize LAR codes to Q15 reflection coefficients (steady-state, i.e.
// without zone interpolation). Handy for analysis and tests.
inline std::array<std::int16_t, 8> lar_codes_to_reflection(const std::array<std::uint8_t, 8>& codes) {
    std::array<fx::Word, 8> larpp{};
    detail::decode_lar(codes, larpp);
    detail::larp_to_rp(larpp);
    return larpp;
}

// ---------------------------------------------------------------------------
// Encoder.
// ---------------------------------------------------------------------------
class Encoder {
    using Word = fx::Word;
    using LongWord = fx::LongWord;

public:
    Encoder() { reset(); }

    void reset() {
        z1_ = 0;
        l_z2_ = 0;
        mp_ = 0;
        larpp_prev_.fill(0);
        u_.fill(0);
        dp_.fill(0);
    }

    // 4.2.1-4.2.3: downscaling, offset compensation, pre-emphasis.
    // Advances the filter memories, so call order matters.
    std::array<std::int16_t, kFrameSamples> preprocess(std::span<const std::int16_t> frame) {
        if (frame.size() != kFrameSamples)
            throw LengthMismatch("preprocess needs exactly 160 samples");
        std::array<std::int16_t, kFrameSamples> out{};
        for (int k = 0; k < kFrameSamples; ++k) {
            Word so = static_cast<Word>(fx::sasr(frame[static_cast<std::size_t>(k)], 3) << 2);

            Word s1 = static_cast<Word>(so - z1_);
            z1_ = so;

            LongWord l_s2 = static_cast<LongWord>(s1) << 15;
            Word msp = static_cast<Word>(fx::sasr(l_z2_, 15));
            Word lsp = static_cast<Word>(l_z2_ - (static_cast<LongWord>(msp) << 15));
            l_s2 += fx::mult_r(lsp, 32735);
            l_z2_ = fx::l_add(static_cast<LongWord>(msp) * 32735, l_s2);

            LongWord l_temp = fx::l_add(l_z2_, 16384);

            Word pre = fx::mult_r(mp_, -28180);
            mp_ = static_cast<Word>(fx::sasr(l_temp, 15));
            out[static_cast<std::size_t>(k)] = fx::add(mp_, pre);
        }
        return out;
    }

    CodecFrame encode_frame(std::span<const std::int16_t> frame) {
        if (frame.size() != kFrameSamples)
            throw LengthMismatch("encode_frame needs exactly 160 samples");

        auto pre = preprocess(frame);
        std::array<Word, kFrameSamples> s{};
        std::copy(pre.begin(), pre.end(), s.begin());

        CodecFrame out;
        out.lar_codes = detail::lpc_analysis_inplace(s);
        short_term_analysis(out.lar_codes, s);

        Word* dp = dp_.data() + 120; // dp[-120..-1] is history
        for (int j = 0; j < 4; ++j) {
            auto& sp = out.sub[static_cast<std::size_t>(j)];
            const Word* d = s.data() + j * kSubframeSamples;

            detail::ltp_parameters(d, dp, sp.ltp_lag, sp.ltp_gain);

            std::array<Word, 40> dpp{};
            std::array<Word, 40> e{};
            detail::ltp_filtering(sp.ltp_gain, sp.ltp_lag, dp, d, dpp.data(), e.data());

            std::array<Word, 40> x{};
            detail::weighting_filter(e.data(), x);
            std::array<Word, 13> xm{};
            sp.grid_position = detail::rpe_grid_selection(x, xm);

            Word exp, mant;
            detail::apcm_quantization(xm, sp.rpe_pulses, sp.block_max, exp, mant);

            std::array<Word, 13> xmp{};
            detail::apcm_inverse_quantization(sp.rpe_pulses, exp, mant, xmp);
            std::array<Word, 40> ep{};
            detail::rpe_grid_positioning(sp.grid_position, xmp, ep.data());

            // reconstructed short-term residual feeds the next LTP searches
            for (int k = 0; k < 40; ++k)
                dp[k] = fx::add(ep[static_cast<std::size_t>(k)], dpp[static_cast<std::size_t>(k)]);
            dp += 40;
        }
        std::copy(dp_.begin() + 160, dp_.end(), dp_.begin());
        return out;
    }

private:
    void short_term_analysis(const std::array<std::uint8_t, 8>& lar_codes,
                             std::array<Word, kFrameSamples>& s) {
        std::array<Word, 8> larpp{};
        detail::decode_lar(lar_codes, larpp);

        static constexpr int start[4] = {0, 13, 27, 40};
        static constexpr int count[4] = {13, 14, 13, 120};
        std::array<Word, 8> larp{};
        for (int zone = 0; zone < 4; ++zone) {
            detail::interpolate_lar(larpp_prev_, larpp, zone, larp);
            detail::larp_to_rp(larp);
            detail::short_term_analysis_filtering(u_, larp, s.data() + start[zone], count[zone]);
        }
        larpp_prev_ = larpp;
    }

    Word z1_ = 0;
    LongWord l_z2_ = 0;
    Word mp_ = 0;
    std::array<Word, 8> larpp_prev_{};
    std::array<Word, 8> u_{};
    std::array<Word, 280> dp_{}; // 120 history + 4*40 current reconstructed residual
};

// ---------------------------------------------------------------------------
// Decoder.
// ---------------------------------------------------------------------------
class Decoder {
    using Word = fx::Word;

public:
    Decoder() { reset(); }

    void reset() {
        larpp_prev_.fill(0);
        drp_.fill(0);
        v_.fill(0);
        msr_ = 0;
        nrp_ = 40;
    }

    std::array<std::int16_t, kFrameSamples> decode_frame(const CodecFrame& frame) {
        if (!frame.is_valid()) throw InvalidFrame("frame field out of range");

        std::array<Word, kFrameSamples> wt{};
        Word* drp = drp_.data() + 120;
        for (int j = 0; j < 4; ++j) {
            const auto& sp = frame.sub[static_cast<std::size_t>(j)];

            Word exp, mant;
            detail::xmaxc_to_exp_mant(sp.block_max, exp, mant);
            std::array<Word, 13> xmp{};
            detail::apcm_inverse_quantization(sp.rpe_pulses, exp, mant, xmp);
            std::array<Word, 40> erp{};
            detail::rpe_grid_positioning(sp.grid_position, xmp, erp.data());

            // 4.3.2 with the standard's lag concealment: an out-of-range
            // received lag reuses the previous valid one.
            Word nr = (sp.ltp_lag < 40 || sp.ltp_lag > 120) ? nrp_ : static_cast<Word>(sp.ltp_lag);
            nrp_ = nr;
            Word brp = tables::kQlb[sp.ltp_gain];
            for (int k = 0; k < 40; ++k)
                drp[k] = fx::add(erp[static_cast<std::size_t>(k)], fx::mult_r(brp, drp[k - nr]));

            for (int k = 0; k < 120; ++k) drp[k - 120] = drp[k - 80];

            for (int k = 0; k < 40; ++k)
                wt[static_cast<std::size_t>(j * 40 + k)] = drp[k];
        }

        std::array<Word, kFrameSamples> sr{};
        short_term_synthesis(frame.lar_codes, wt, sr);

        std::array<std::int16_t, kFrameSamples> out{};
        for (int k = 0; k < kFrameSamples; ++k) {
            // 4.3.4: de-emphasis, upscaling, truncation of the 3 low bits
            msr_ = fx::add(sr[static_cast<std::size_t>(k)], fx::mult_r(msr_, 28180));
            out[static_cast<std::size_t>(k)] = static_cast<std::int16_t>(fx::add(msr_, msr_) & ~7);
        }
        return out;
    }

private:
    void short_term_synthesis(const std::array<std::uint8_t, 8>& lar_codes,
                              const std::array<fx::Word, kFrameSamples>& wt,
                              std::array<fx::Word, kFrameSamples>& sr) {
        std::array<Word, 8> larpp{};
        detail::decode_lar(lar_codes, larpp);

        static constexpr int start[4] = {0, 13, 27, 40};
        static constexpr int count[4] = {13, 14, 13, 120};
        std::array<Word, 8> larp{};
        for (int zone = 0; zone < 4; ++zone) {
            detail::interpolate_lar(larpp_prev_, larpp, zone, larp);
            detail::larp_to_rp(larp);
            detail::short_term_synthesis_filtering(v_, larp, wt.data() + start[zone],
                                                   sr.data() + start[zone], count[zone]);
        }
        larpp_prev_ = larpp;
    }

    std::array<Word, 8> larpp_prev_{};
    std::array<Word, 160> drp_{}; // 120 history + 40 current
    std::array<Word, 9> v_{};
    Word msr_ = 0;
    Word nrp_ = 40;
};

} // namespace gvs::gsm0610

#endif
