// Deterministic counter-based random generator.
//
// The generator is SplitMix64 run in counter mode: output(i) is the SplitMix64
// finalizer applied to base + i * GOLDEN, where base mixes a seed with a stream
// tag. Outputs depend only on (seed, stream, counter), so any substream can be
// recreated independently of draw order, and results are identical across
// platforms (only uint64 arithmetic is used). Substreams are cheap: one per
// node, per link, per Monte Carlo trial, etc.
#pragma once

#include <cstdint>
#include <vector>

namespace eakr {

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(detail::mix64(seed + detail::kGolden) ^
                detail::mix64(stream * detail::kGolden + 0x632BE59BD9B4E019ull)) {}

    // Derive a stream tag from labeled parts (e.g. {purpose, node id}).
    static std::uint64_t stream_tag(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        return detail::mix64(a + detail::kGolden) ^ detail::mix64(b + 2 * detail::kGolden) ^
               detail::mix64(c + 3 * detail::kGolden);
    }

    std::uint64_t next_u64() { return detail::mix64(base_ + (++counter_) * detail::kGolden); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n) via rejection sampling.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    // Uniform k-subset of {0, ..., pool-1} (Floyd's algorithm), sorted.
    std::vector<std::uint32_t> sample_subset(std::uint32_t pool, std::uint32_t k);

  private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

// Purpose tags keeping unrelated substreams apart.
namespace stream {
inline constexpr std::uint64_t kPositions = 1;
inline constexpr std::uint64_t kRing = 2;
inline constexpr std::uint64_t kLinkFailure = 3;
inline constexpr std::uint64_t kShare = 4;
inline constexpr std::uint64_t kTrial = 5;
}  // namespace stream

}  // namespace eakr
