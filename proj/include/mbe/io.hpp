#pragma once

// Deterministic text serialization helpers: shortest round-trip doubles and
// a 64-bit FNV-1a content hash.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <system_error>

#include "mbe/model.hpp"

namespace mbe {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Canonical one-line text of the model, used for provenance hashes.
inline std::string canonical_text(const ModelParams& m, const Pumping& P) {
    std::string s;
    auto add = [&](std::string_view key, double v) {
        s += key;
        s += '=';
        s += format_double(v);
        s += ';';
    };
    add("omega1", m.omega1);
    add("omega2", m.omega2);
    add("Omega", m.Omega);
    add("p", m.p);
    add("gamma", m.gamma);
    add("c", m.c);
    add("hbar", m.hbar);
    add("Ae.re", P.Ae.real());
    add("Ae.im", P.Ae.imag());
    for (const auto& mode : P.modes) {
        add("mode.re", mode.amplitude.real());
        add("mode.im", mode.amplitude.imag());
        add("mode.freq", mode.frequency);
    }
    return s;
}

inline std::string params_hash(const ModelParams& m, const Pumping& P) {
    return hex64(fnv1a64(canonical_text(m, P)));
}

}  // namespace mbe
