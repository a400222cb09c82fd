// gvs - command-line front end for the voice scrambling pipeline.
//
// Subcommands: keygen, encrypt, decrypt, eavesdrop, codec-encode,
// codec-decode, analyze, simulate. Exit codes: 0 success, 1 usage error,
// 2 data/format error, 3 decryption failure (wrong key or tampering).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gvs/des.hpp"
#include "gvs/errors.hpp"
#include "gvs/gsm0610.hpp"
#include "gvs/metrics.hpp"
#include "gvs/scrambler.hpp"
#include "gvs/secure_stream.hpp"
#include "gvs/speech_io.hpp"

namespace fs = std::filesystem;
using gvs::speech_io::PcmSignal;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw gvs::IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw gvs::IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw gvs::IoError("write failed for " + path.string());
}

// .hex files hold 16 hex chars; anything else is 8 raw bytes.
gvs::des::Key load_key(const fs::path& path) {
    auto bytes = read_file(path);
    gvs::des::Key key;
    if (path.extension() == ".hex") {
        std::string hex;
        for (std::uint8_t c : bytes)
            if (!std::isspace(c)) hex.push_back(static_cast<char>(c));
        if (hex.size() != 16) throw gvs::BadLength("hex key file must hold 16 hex digits");
        for (int i = 0; i < 8; ++i) {
            auto nibble = [&](char c) -> unsigned {
                if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
                if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
                if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
                throw gvs::BadLength("invalid hex digit in key file");
            };
            key.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
                (nibble(hex[static_cast<std::size_t>(2 * i)]) << 4) |
                nibble(hex[static_cast<std::size_t>(2 * i + 1)]));
        }
    } else {
        if (bytes.size() != 8) throw gvs::BadLength("raw key file must be exactly 8 bytes");
        std::copy(bytes.begin(), bytes.end(), key.bytes.begin());
    }
    return key;
}

void save_key(const gvs::des::Key& key, const fs::path& path) {
    if (path.extension() == ".hex") {
        static const char* digits = "0123456789abcdef";
        std::string hex;
        for (auto b : key.bytes) {
            hex.push_back(digits[b >> 4]);
            hex.push_back(digits[b & 0xF]);
        }
        hex.push_back('\n');
        write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(hex.data()), hex.size()));
    } else {
        write_file(path, key.bytes);
    }
}

gvs::scrambler::InversionMode parse_mode(const std::string& name) {
    if (name == "time") return gvs::scrambler::InversionMode::time_reverse;
    if (name == "sign") return gvs::scrambler::InversionMode::sign_flip;
    throw CLI::ValidationError("--inversion-mode must be 'time' or 'sign'");
}

// The scrambled-but-not-yet-coded signal (it never exists on the wire, so it
// is recomputed here exactly as the sender builds it).
PcmSignal scrambled_signal(const PcmSignal& input, const gvs::des::Key& key,
                           const gvs::scrambler::ScrambleConfig& config,
                           gvs::scrambler::InversionMode mode) {
    auto [padded, original] =
        gvs::speech_io::pad_to_superframe(input, config.sub_frame_len, config.frames_per_super);
    (void)original;
    std::size_t unit = static_cast<std::size_t>(config.sub_frame_len) *
                       static_cast<std::size_t>(config.frames_per_super);
    PcmSignal out;
    out.samples.reserve(padded.samples.size());
    for (std::size_t s = 0; unit != 0 && s < padded.samples.size() / unit; ++s) {
        gvs::des::Keystream ks(key, static_cast<std::uint32_t>(s));
        auto table = gvs::scrambler::generate_table(ks, static_cast<std::uint32_t>(s), config);
        auto scr = gvs::scrambler::scramble(
            std::span<const std::int16_t>(padded.samples.data() + s * unit, unit), table, mode);
        out.samples.insert(out.samples.end(), scr.begin(), scr.end());
    }
    return out;
}

double rms_difference(std::span<const std::int16_t> a, std::span<const std::int16_t> b) {
    std::size_t n = std::min(a.size(), b.size());
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

struct Options {
    std::string in_path, out_path, key_path, ref_path;
    int sub_frame_len = 160;
    int frames_per_super = 16;
    std::string inversion = "time";
    double ber = 0.0;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int run_keygen(const Options& opt) {
    gvs::des::Key key;
    if (opt.seed_given) {
        gvs::secure_stream::detail::SplitMix64 rng(opt.seed);
        std::uint64_t v = rng.next();
        for (int i = 7; i >= 0; --i) {
            key.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xFF);
            v >>= 8;
        }
    } else {
        std::random_device rd;
        for (auto& b : key.bytes) b = static_cast<std::uint8_t>(rd());
    }
    save_key(key, opt.out_path);
    std::cout << "wrote key to " << opt.out_path << "\n";
    return 0;
}

int run_encrypt(const Options& opt) {
    auto signal = gvs::speech_io::read_wav(opt.in_path);
    auto key = load_key(opt.key_path);
    gvs::scrambler::ScrambleConfig config{opt.sub_frame_len, opt.frames_per_super};
    auto stream = gvs::secure_stream::encrypt_stream(signal, key, config,
                                                     parse_mode(opt.inversion));
    write_file(opt.out_path, stream);
    std::cout << "encrypted " << signal.samples.size() << " samples into "
              << stream.size() << " bytes\n";
    return 0;
}

int run_decrypt(const Options& opt) {
    auto stream = read_file(opt.in_path);
    auto key = load_key(opt.key_path);
    auto signal = gvs::secure_stream::decrypt_stream(stream, key, parse_mode(opt.inversion));
    gvs::speech_io::write_wav(signal, opt.out_path);
    std::cout << "recovered " << signal.samples.size() << " samples\n";
    return 0;
}

int run_eavesdrop(const Options& opt) {
    auto stream = read_file(opt.in_path);
    auto signal = gvs::secure_stream::eavesdrop_stream(stream);
    gvs::speech_io::write_wav(signal, opt.out_path);
    std::cout << "decoded " << signal.samples.size() << " samples without descrambling\n";
    return 0;
}

int run_codec_encode(const Options& opt) {
    auto signal = gvs::speech_io::read_wav(opt.in_path);
    // the raw frame file has no length field; the tail is zero-padded to a
    // whole frame
    auto [padded, original] = gvs::speech_io::pad_to_superframe(signal, 160, 1);
    (void)original;
    gvs::gsm0610::Encoder encoder;
    std::vector<std::uint8_t> out;
    for (std::size_t off = 0; off + gvs::gsm0610::kFrameSamples <= padded.samples.size();
         off += gvs::gsm0610::kFrameSamples) {
        auto frame = encoder.encode_frame(std::span<const std::int16_t>(
            padded.samples.data() + off, gvs::gsm0610::kFrameSamples));
        auto packed = gvs::gsm0610::pack_frame(frame);
        out.insert(out.end(), packed.begin(), packed.end());
    }
    write_file(opt.out_path, out);
    std::cout << "encoded " << out.size() / gvs::gsm0610::kPackedFrameBytes << " frames\n";
    return 0;
}

int run_codec_decode(const Options& opt) {
    auto bytes = read_file(opt.in_path);
    if (bytes.size() % gvs::gsm0610::kPackedFrameBytes != 0)
        throw gvs::Truncated("codec file size is not a multiple of 33 bytes");
    gvs::gsm0610::Decoder decoder;
    PcmSignal out;
    for (std::size_t off = 0; off < bytes.size(); off += gvs::gsm0610::kPackedFrameBytes) {
        auto frame = gvs::gsm0610::unpack_frame(
            std::span<const std::uint8_t>(bytes.data() + off, gvs::gsm0610::kPackedFrameBytes));
        auto pcm = decoder.decode_frame(frame);
        out.samples.insert(out.samples.end(), pcm.begin(), pcm.end());
    }
    gvs::speech_io::write_wav(out, opt.out_path);
    std::cout << "decoded " << out.samples.size() << " samples\n";
    return 0;
}

int run_analyze(const Options& opt) {
    auto ref = gvs::speech_io::read_wav(opt.ref_path);
    auto test = gvs::speech_io::read_wav(opt.in_path);
    std::size_t n = std::min(ref.samples.size(), test.samples.size());
    ref.samples.resize(n);
    test.samples.resize(n);

    fs::create_directories(opt.out_path);
    auto report = gvs::metrics::segmental_snr(ref.samples, test.samples);
    double xcorr = gvs::metrics::max_normalized_cross_correlation(ref.samples, test.samples, 160);

    std::cout << "samples compared:       " << n << "\n";
    std::cout << "segmental SNR (dB):     " << report.mean_db << " over "
              << report.active_segments << "/" << report.total_segments
              << " active segments\n";
    std::cout << "max cross-correlation:  " << xcorr << " (lags within +-160)\n";

    gvs::metrics::export_overlay_csv(ref.samples, test.samples,
                                     fs::path(opt.out_path) / "overlay.csv");
    gvs::metrics::export_spectrogram_csv(gvs::metrics::spectrogram(ref.samples),
                                         fs::path(opt.out_path) / "ref_spectrogram.csv");
    gvs::metrics::export_spectrogram_csv(gvs::metrics::spectrogram(test.samples),
                                         fs::path(opt.out_path) / "test_spectrogram.csv");
    return 0;
}

int run_simulate(const Options& opt) {
    auto original = gvs::speech_io::read_wav(opt.in_path);
    auto key = load_key(opt.key_path);
    auto mode = parse_mode(opt.inversion);
    gvs::scrambler::ScrambleConfig config{opt.sub_frame_len, opt.frames_per_super};

    fs::path dir(opt.out_path);
    fs::create_directories(dir);

    auto stream = gvs::secure_stream::encrypt_stream(original, key, config, mode);
    if (opt.ber > 0.0) stream = gvs::secure_stream::inject_bit_errors(stream, opt.ber, opt.seed);

    auto scrambled = scrambled_signal(original, key, config, mode);
    auto recovered = gvs::secure_stream::decrypt_stream(stream, key, mode);
    auto eavesdropped = gvs::secure_stream::eavesdrop_stream(stream);

    gvs::speech_io::write_wav(original, dir / "original.wav");
    gvs::speech_io::write_wav(scrambled, dir / "scrambled.wav");
    gvs::speech_io::write_wav(eavesdropped, dir / "eavesdropped.wav");
    gvs::speech_io::write_wav(recovered, dir / "recovered.wav");

    gvs::metrics::export_spectrogram_csv(gvs::metrics::spectrogram(original.samples),
                                         dir / "original_spectrogram.csv");
    gvs::metrics::export_spectrogram_csv(gvs::metrics::spectrogram(scrambled.samples),
                                         dir / "scrambled_spectrogram.csv");
    gvs::metrics::export_spectrogram_csv(gvs::metrics::spectrogram(eavesdropped.samples),
                                         dir / "eavesdropped_spectrogram.csv");
    gvs::metrics::export_spectrogram_csv(gvs::metrics::spectrogram(recovered.samples),
                                         dir / "recovered_spectrogram.csv");
    gvs::metrics::export_overlay_csv(original.samples, recovered.samples, dir / "overlay.csv");

    auto snr = gvs::metrics::segmental_snr(original.samples, recovered.samples);
    std::vector<std::int16_t> eaves_head(
        eavesdropped.samples.begin(),
        eavesdropped.samples.begin() +
            static_cast<std::ptrdiff_t>(std::min(original.samples.size(),
                                                 eavesdropped.samples.size())));
    double xc_rec =
        gvs::metrics::max_normalized_cross_correlation(original.samples, recovered.samples, 160);
    double xc_eaves =
        gvs::metrics::max_normalized_cross_correlation(original.samples, eaves_head, 160);

    std::ofstream rep(dir / "report.txt", std::ios::trunc);
    if (!rep) throw gvs::IoError("cannot create report.txt");
    rep << "input:                   " << opt.in_path << "\n";
    rep << "samples:                 " << original.samples.size() << "\n";
    rep << "sub-frame length:        " << opt.sub_frame_len << "\n";
    rep << "sub-frames per super:    " << opt.frames_per_super << "\n";
    rep << "inversion mode:          " << opt.inversion << "\n";
    rep << "bit error rate:          " << opt.ber << "\n";
    rep << "stream bytes:            " << stream.size() << "\n";
    rep << "segmental SNR (dB):      " << snr.mean_db << " over " << snr.active_segments
        << "/" << snr.total_segments << " active segments\n";
    rep << "xcorr original/recovered:    " << xc_rec << "\n";
    rep << "xcorr original/eavesdropped: " << xc_eaves << "\n";
    rep << "rms(original - recovered):   "
        << rms_difference(original.samples, recovered.samples)
        << "  (nonzero: the vocoder's bit-rate reduction leaves a margin)\n";
    std::cout << "simulation written to " << dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gvs - scrambled speech over a full-rate vocoder with "
                 "DES-protected permutation tables"};
    app.require_subcommand(1);

    Options opt;

    auto add_scramble_flags = [&](CLI::App* cmd) {
        cmd->add_option("--sub-frame-len", opt.sub_frame_len,
                        "sub-frame length in samples (multiple of 160)");
        cmd->add_option("--frames-per-super", opt.frames_per_super,
                        "sub-frames per super-frame (1..256)");
        cmd->add_option("--inversion-mode", opt.inversion, "time | sign");
    };

    auto* keygen = app.add_subcommand("keygen", "write a DES key file (.key raw, .hex text)");
    keygen->add_option("--out", opt.out_path, "key file")->required();
    auto* seed_opt = keygen->add_option("--seed", opt.seed, "deterministic seed");

    auto* encrypt = app.add_subcommand("encrypt", "WAV -> .gvs secure stream");
    encrypt->add_option("--in", opt.in_path, "input WAV")->required();
    encrypt->add_option("--key", opt.key_path, "key file")->required();
    encrypt->add_option("--out", opt.out_path, "output .gvs")->required();
    add_scramble_flags(encrypt);

    auto* decrypt = app.add_subcommand("decrypt", ".gvs -> WAV with the key");
    decrypt->add_option("--in", opt.in_path, "input .gvs")->required();
    decrypt->add_option("--key", opt.key_path, "key file")->required();
    decrypt->add_option("--out", opt.out_path, "output WAV")->required();
    decrypt->add_option("--inversion-mode", opt.inversion, "time | sign");

    auto* eavesdrop = app.add_subcommand("eavesdrop", ".gvs -> WAV without descrambling");
    eavesdrop->add_option("--in", opt.in_path, "input .gvs")->required();
    eavesdrop->add_option("--out", opt.out_path, "output WAV")->required();

    auto* cenc = app.add_subcommand("codec-encode", "WAV -> raw 33-byte codec frames");
    cenc->add_option("--in", opt.in_path, "input WAV")->required();
    cenc->add_option("--out", opt.out_path, "output frame file")->required();

    auto* cdec = app.add_subcommand("codec-decode", "raw codec frames -> WAV");
    cdec->add_option("--in", opt.in_path, "input frame file")->required();
    cdec->add_option("--out", opt.out_path, "output WAV")->required();

    auto* analyze = app.add_subcommand("analyze", "compare two WAVs, emit metrics and CSVs");
    analyze->add_option("--ref", opt.ref_path, "reference WAV")->required();
    analyze->add_option("--in", opt.in_path, "signal under test")->required();
    analyze->add_option("--out", opt.out_path, "output directory")->required();

    auto* simulate = app.add_subcommand(
        "simulate", "full pipeline: emit original/scrambled/eavesdropped/recovered + report");
    simulate->add_option("--in", opt.in_path, "input WAV")->required();
    simulate->add_option("--key", opt.key_path, "key file")->required();
    simulate->add_option("--out", opt.out_path, "output directory")->required();
    simulate->add_option("--ber", opt.ber, "codec-frame bit error rate [0,1]");
    simulate->add_option("--seed", opt.seed, "bit-error generator seed");
    add_scramble_flags(simulate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    opt.seed_given = seed_opt->count() > 0;

    try {
        // flag-range violations are usage errors, not data errors
        if (app.got_subcommand(encrypt) || app.got_subcommand(simulate)) {
            if (opt.sub_frame_len <= 0 || opt.sub_frame_len % 160 != 0)
                throw CLI::ValidationError("--sub-frame-len must be a positive multiple of 160");
            if (opt.frames_per_super < 1 || opt.frames_per_super > 256)
                throw CLI::ValidationError("--frames-per-super must be in [1,256]");
            parse_mode(opt.inversion);
        }
        if (app.got_subcommand(simulate) && (opt.ber < 0.0 || opt.ber > 1.0))
            throw CLI::ValidationError("--ber must be in [0,1]");
        if (app.got_subcommand(keygen)) return run_keygen(opt);
        if (app.got_subcommand(encrypt)) return run_encrypt(opt);
        if (app.got_subcommand(decrypt)) return run_decrypt(opt);
        if (app.got_subcommand(eavesdrop)) return run_eavesdrop(opt);
        if (app.got_subcommand(cenc)) return run_codec_encode(opt);
        if (app.got_subcommand(cdec)) return run_codec_decode(opt);
        if (app.got_subcommand(analyze)) return run_analyze(opt);
        if (app.got_subcommand(simulate)) return run_simulate(opt);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const gvs::DecryptionFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const gvs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
