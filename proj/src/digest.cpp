#include "eakr/digest.hpp"

#include "eakr/types.hpp"

namespace eakr {

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string Digest64::hex() const { return to_hex(state_); }

std::string Material128::hex() const { return to_hex(hi) + to_hex(lo); }

}  // namespace eakr
