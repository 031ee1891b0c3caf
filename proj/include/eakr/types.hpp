// Shared scalar types and error categories for the eakr library.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eakr {

using NodeId = std::uint32_t;
using KeyId = std::uint32_t;

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

enum class Tier { L, H, Sink };

inline const char* tier_name(Tier t) {
    switch (t) {
        case Tier::L: return "L";
        case Tier::H: return "H";
        case Tier::Sink: return "sink";
    }
    return "?";
}

// Configuration / input validation problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested destination has no route to the sink (CLI exit code 3).
struct UnreachableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixpoint failed to converge within the round cap (CLI exit code 4).
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 128-bit key/share material, treated as an element of GF(2)^128.
struct Material128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    friend Material128 operator^(Material128 a, Material128 b) {
        return {a.hi ^ b.hi, a.lo ^ b.lo};
    }
    Material128& operator^=(Material128 o) {
        hi ^= o.hi;
        lo ^= o.lo;
        return *this;
    }
    friend bool operator==(const Material128&, const Material128&) = default;
    bool is_zero() const { return hi == 0 && lo == 0; }
    std::string hex() const;
};

}  // namespace eakr
