#include "eakr/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace eakr {

std::vector<std::uint32_t> CounterRng::sample_subset(std::uint32_t pool, std::uint32_t k) {
    if (k > pool) throw std::invalid_argument("sample_subset: k > pool");
    // Floyd's algorithm: uniform over k-subsets, k draws.
    std::vector<std::uint32_t> out;
    out.reserve(k);
    for (std::uint32_t j = pool - k; j < pool; ++j) {
        auto t = static_cast<std::uint32_t>(next_below(j + 1));
        if (std::find(out.begin(), out.end(), t) != out.end()) {
            out.push_back(j);
        } else {
            out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace eakr
