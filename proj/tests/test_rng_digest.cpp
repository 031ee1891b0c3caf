#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "eakr/digest.hpp"
#include "eakr/rng.hpp"

using namespace eakr;

TEST_CASE("counter rng reproduces a substream independently of draw order") {
    CounterRng a(42, 7);
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 16; ++i) first.push_back(a.next_u64());

    CounterRng b(42, 7);
    std::vector<std::uint64_t> second;
    for (int i = 0; i < 16; ++i) second.push_back(b.next_u64());
    CHECK(first == second);

    CounterRng c(42, 8);
    CHECK(c.next_u64() != first[0]);
    CounterRng d(43, 7);
    CHECK(d.next_u64() != first[0]);
}

TEST_CASE("stream tags separate labeled substreams") {
    std::set<std::uint64_t> tags;
    for (std::uint64_t a = 0; a < 8; ++a)
        for (std::uint64_t b = 0; b < 8; ++b)
            for (std::uint64_t c = 0; c < 4; ++c) tags.insert(CounterRng::stream_tag(a, b, c));
    CHECK(tags.size() == 8 * 8 * 4);
    // Argument positions are not interchangeable.
    CHECK(CounterRng::stream_tag(1, 2) != CounterRng::stream_tag(2, 1));
}

TEST_CASE("next_double is uniform on [0, 1)") {
    CounterRng rng(1, 99);
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.next_double();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        sum += x;
    }
    const double mean = sum / n;
    // 3 sigma for the mean of U[0,1): sigma = 1/sqrt(12 n).
    CHECK(std::abs(mean - 0.5) < 3.0 / std::sqrt(12.0 * n));
}

TEST_CASE("next_below stays in range and covers all residues") {
    CounterRng rng(5, 3);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 20000; ++i) {
        const std::uint64_t x = rng.next_below(10);
        REQUIRE(x < 10);
        ++counts[static_cast<std::size_t>(x)];
    }
    // Every residue appears; expected 2000 each, allow wide slack.
    for (int c : counts) CHECK(c > 1500);
}

TEST_CASE("sample_subset draws a sorted unique k-subset of the pool") {
    CounterRng rng(11, 12);
    const auto s = rng.sample_subset(100, 30);
    REQUIRE(s.size() == 30);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    for (auto k : s) CHECK(k < 100);

    CounterRng rng2(11, 12);
    CHECK(rng2.sample_subset(100, 30) == s);

    CounterRng rng3(11, 13);
    auto full = rng3.sample_subset(25, 25);
    REQUIRE(full.size() == 25);
    for (std::uint32_t i = 0; i < 25; ++i) CHECK(full[i] == i);
}

TEST_CASE("subset sampling is unbiased enough: element inclusion frequency") {
    // Each element of a 50-pool should land in a 10-subset with p = 0.2.
    std::vector<int> hits(50, 0);
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        CounterRng rng(777, static_cast<std::uint64_t>(i));
        for (auto k : rng.sample_subset(50, 10)) ++hits[k];
    }
    for (int h : hits) {
        const double p = static_cast<double>(h) / n;
        // 4 sigma of a Bernoulli(0.2) mean over 20000 draws, ~0.0113.
        CHECK(std::abs(p - 0.2) < 4.0 * std::sqrt(0.2 * 0.8 / n));
    }
}

TEST_CASE("fnv-1a digest matches published test vectors") {
    CHECK(Digest64().value() == 0xCBF29CE484222325ull);
    CHECK(Digest64().str("a").value() == 0xAF63DC4C8601EC8Cull);
    CHECK(Digest64().str("foobar").value() == 0x85944171F73967E8ull);
}

TEST_CASE("digest u64 folds little-endian bytes") {
    const std::uint64_t v = 0x0102030405060708ull;
    const unsigned char bytes[8] = {8, 7, 6, 5, 4, 3, 2, 1};
    CHECK(Digest64().u64(v).value() == Digest64().bytes(bytes, 8).value());
}

TEST_CASE("hex formatting is 16 lowercase digits") {
    CHECK(to_hex(0) == "0000000000000000");
    CHECK(to_hex(0xDEADBEEFull) == "00000000deadbeef");
    CHECK(Digest64().str("a").hex() == "af63dc4c8601ec8c");
}
