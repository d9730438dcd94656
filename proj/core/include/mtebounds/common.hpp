#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace mtebounds {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these to exit codes: configuration/data/
// parameter/support problems -> 2, numerical failures (rank, denominator,
// weak instrument) -> 3, identified-set rejection -> 4.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad option, missing column, mismatched inputs.
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed data values (non-binary treatment codes, non-finite numbers).
struct DataError : Error {
    using Error::Error;
};

/// Out-of-range parameter (c < 1, invalid level, ...).
struct ParamError : Error {
    using Error::Error;
};

/// Empty treatment arm, degenerate integration domain, support violations.
struct SupportError : Error {
    using Error::Error;
};

/// Rank deficiency, vanishing denominators, non-invertible propensity score.
struct NumericError : Error {
    using Error::Error;
};

/// Empty intersection of identified sets.
struct RejectionError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Formatting / numeric helpers
// ---------------------------------------------------------------------------

/// Shortest decimal string that round-trips the double exactly.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline int sign_of(double v) {
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

inline bool nearly_equal(double a, double b, double rel = 1e-12, double abs_eps = 0.0) {
    const double diff = std::fabs(a - b);
    const double scale = std::max(std::fabs(a), std::fabs(b));
    return diff <= std::max(abs_eps, rel * scale);
}

/// FNV-1a over a byte string; used for input fingerprints in run manifests.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace mtebounds
