#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nitro {

//! Keys and values are unsigned 32-bit integers. The maximum representable
//! key is reserved as padding for partially filled nodes and must not occur
//! in a column.
using key_type = std::uint32_t;
using value_type = std::uint32_t;

//! Padding sentinel. Compares greater than every valid key.
inline constexpr key_type max_sentinel = std::numeric_limits<key_type>::max();

//! Outcome of a point lookup. Not-found results compare equal regardless
//! of the value field.
struct SearchResult {
    bool found = false;
    value_type value = 0;

    friend bool operator==(const SearchResult& a, const SearchResult& b) {
        return a.found == b.found && (!a.found || a.value == b.value);
    }
};

//! A column of (key, value) tuples sorted by key. Every index structure in
//! this library is built over a SortedColumn and leaves it untouched.
struct SortedColumn {
    std::vector<key_type> keys;
    std::vector<value_type> values;

    std::size_t size() const { return keys.size(); }

    //! Key at a position of the column viewed as padded to arbitrary
    //! length: real keys below size(), sentinel beyond.
    key_type padded_key(std::uint64_t pos) const {
        return pos < keys.size() ? keys[pos] : max_sentinel;
    }
};

//! Sorts tuples by key. The sort is stable, so among duplicate keys the
//! first inserted tuple stays first. Sentinel-valued keys are rejected.
inline SortedColumn build_column(std::vector<std::pair<key_type, value_type>> pairs) {
    for (const auto& p : pairs)
        if (p.first == max_sentinel)
            throw std::invalid_argument("build_column: key equals the padding sentinel");
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    SortedColumn col;
    col.keys.reserve(pairs.size());
    col.values.reserve(pairs.size());
    for (const auto& p : pairs) {
        col.keys.push_back(p.first);
        col.values.push_back(p.second);
    }
    return col;
}

//! Reference lookup: scans front to back and returns the first tuple with a
//! matching key. Every search structure must agree with this function.
inline SearchResult oracle_search(const SortedColumn& col, key_type key) {
    for (std::size_t i = 0; i < col.keys.size(); ++i)
        if (col.keys[i] == key)
            return {true, col.values[i]};
    return {false, 0};
}

} // namespace nitro
