// FNV-1a 64-bit digests used for envelope tags, graph hashes and the output
// manifest. Deterministic and dependency-free; the protocol layer is symbolic,
// so collision resistance is not a requirement here.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace eakr {

class Digest64 {
  public:
    Digest64& bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001B3ull;
        }
        return *this;
    }
    Digest64& str(std::string_view s) { return bytes(s.data(), s.size()); }
    Digest64& u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        return bytes(b, 8);
    }
    Digest64& u32(std::uint32_t v) { return u64(v); }

    std::uint64_t value() const { return state_; }
    std::string hex() const;

  private:
    std::uint64_t state_ = 0xCBF29CE484222325ull;
};

std::string to_hex(std::uint64_t v);

}  // namespace eakr
