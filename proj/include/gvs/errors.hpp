// errors.hpp - exception types shared across the gvs library.
#ifndef GVS_ERRORS_HPP
#define GVS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gvs {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// file / container parsing
struct IoError : Error { using Error::Error; };
struct NotWav : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct Truncated : Error { using Error::Error; };
struct BadHeader : Error { using Error::Error; };

// scrambler tables
struct BadVersion : Error { using Error::Error; };
struct NotAPermutation : Error { using Error::Error; };

// block cipher
struct BadLength : Error { using Error::Error; };
struct BadPadding : Error { using Error::Error; };

// codec frames
struct InvalidFrame : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };

// metrics
struct BadWindow : Error { using Error::Error; };
struct SilentInput : Error { using Error::Error; };

// generic argument contract violations
struct LengthMismatch : Error { using Error::Error; };

// wrong key or tampered stream; wraps BadPadding / NotAPermutation
struct DecryptionFailed : Error { using Error::Error; };

} // namespace gvs

#endif
