#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

namespace nitro {

//! Smallest power of two greater than or equal to v (v > 0).
inline std::uint64_t next_pow2(std::uint64_t v) {
    return std::bit_ceil(v);
}

//! Lower median of a sample. Zero-initialized result for an empty sample.
template <typename T>
T median_of(std::vector<T> v) {
    if (v.empty())
        return T{};
    auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

//! Nearest-rank q-quantile of a sample, q in [0, 1].
template <typename T>
T quantile_of(std::vector<T> v, double q) {
    if (v.empty())
        return T{};
    q = std::clamp(q, 0.0, 1.0);
    auto rank = static_cast<std::ptrdiff_t>(q * static_cast<double>(v.size() - 1) + 0.5);
    auto it = v.begin() + rank;
    std::nth_element(v.begin(), it, v.end());
    return *it;
}

} // namespace nitro
