#pragma once

#include <bit>
#include <cstdint>
#include <cstring>

#include "nitro/column.hpp"
#include "nitro/trace.hpp"

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace nitro {

//! Inner-node search strategy: spans larger than this are searched with a
//! binary range search, smaller ones with a forward scan. Sweepable through
//! the explicit threshold parameter of branch_by_key_ranges.
inline constexpr std::size_t node_linear_threshold = 8;

//! Number of keys in an ascending, possibly sentinel-padded span that are
//! strictly less than key. This is the child partition index of a separator
//! node: a query equal to a separator routes to the left partition, and
//! sentinel padding never counts.
template <typename R>
std::size_t branch_by_key_ranges(const key_type* keys, std::size_t count, key_type key,
                                 ArrayId array, std::uint64_t base_offset, R& rec,
                                 std::size_t linear_threshold = node_linear_threshold) {
    if (count > linear_threshold) {
        std::size_t lo = 0, hi = count;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            rec.compare();
            if constexpr (R::tracing)
                rec.probe(array, base_offset + mid * sizeof(key_type));
            if (keys[mid] < key)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }
    std::size_t b = 0;
    while (b < count) {
        rec.compare();
        if constexpr (R::tracing)
            rec.probe(array, base_offset + b * sizeof(key_type));
        if (keys[b] < key)
            ++b;
        else
            break;
    }
    return b;
}

#if defined(__SSE2__)

namespace detail {

//! Lane masks that overwrite trailing lanes with the sentinel so that a
//! 4-lane load of a partial group never counts keys beyond the span.
alignas(16) inline constexpr std::uint32_t lane_pad_mask[4][4] = {
    {0u, 0u, 0u, 0u},
    {0u, ~0u, ~0u, ~0u},
    {0u, 0u, ~0u, ~0u},
    {0u, 0u, 0u, ~0u},
};

} // namespace detail

//! Vectorized branch_by_key_ranges over 4-lane unsigned comparisons.
//! Requires that reads up to the next 16-byte group stay inside the owning
//! allocation; node arenas in this library pad their tails accordingly.
//! Results are identical to the scalar kernel.
template <typename R>
std::size_t branch_by_key_ranges_simd(const key_type* keys, std::size_t count, key_type key,
                                      ArrayId array, std::uint64_t base_offset, R& rec) {
    const __m128i bias = _mm_set1_epi32(static_cast<int>(0x80000000u));
    const __m128i query = _mm_xor_si128(_mm_set1_epi32(static_cast<int>(key)), bias);
    std::size_t b = 0;
    for (std::size_t i = 0; i < count; i += 4) {
        const std::size_t remaining = count - i;
        __m128i group = _mm_loadu_si128(reinterpret_cast<const __m128i*>(keys + i));
        if (remaining < 4) {
            const __m128i pad = _mm_load_si128(
                reinterpret_cast<const __m128i*>(detail::lane_pad_mask[remaining]));
            group = _mm_or_si128(group, pad);
        }
        rec.compare(4);
        if constexpr (R::tracing) {
            rec.probe(array, base_offset + i * sizeof(key_type));
            rec.probe(array, base_offset + i * sizeof(key_type) + 15);
        }
        const __m128i lt = _mm_cmplt_epi32(_mm_xor_si128(group, bias), query);
        b += static_cast<std::size_t>(
            std::popcount(static_cast<unsigned>(_mm_movemask_ps(_mm_castsi128_ps(lt)))));
    }
    return b;
}

inline constexpr bool simd_available = true;

#else

inline constexpr bool simd_available = false;

#endif

//! Dispatches between the scalar and the vectorized kernel. Falls back to
//! scalar where no vector unit is compiled in.
template <typename R>
std::size_t branch_in_node(const key_type* keys, std::size_t count, key_type key, bool use_simd,
                           ArrayId array, std::uint64_t base_offset, R& rec) {
#if defined(__SSE2__)
    if (use_simd)
        return branch_by_key_ranges_simd(keys, count, key, array, base_offset, rec);
#else
    (void)use_simd;
#endif
    return branch_by_key_ranges(keys, count, key, array, base_offset, rec);
}

struct BinarySearchConfig {
    //! The range search switches to a forward scan once the remaining
    //! range holds at most this many keys. A cutoff of 1 degenerates to the
    //! textbook loop whose final candidate is checked by the scan.
    std::size_t linear_cutoff = 8;
};

//! Binary range search over an inclusive column range [low, high]. Each
//! loop iteration halves the range: key > keys[mid] moves low past mid,
//! everything else (including equality) moves high onto mid. The remaining
//! window is scanned forward for the first key not below the query.
template <typename R>
SearchResult binary_search_range(const SortedColumn& col, std::size_t low, std::size_t high,
                                 key_type key, const BinarySearchConfig& cfg, R& rec) {
    const std::size_t cutoff = cfg.linear_cutoff > 0 ? cfg.linear_cutoff : 1;
    while (high - low + 1 > cutoff) {
        const std::size_t mid = (low + high) / 2;
        rec.step();
        rec.compare();
        if constexpr (R::tracing)
            rec.probe(ArrayId::column_keys, static_cast<std::uint64_t>(mid) * sizeof(key_type));
        if (key > col.keys[mid])
            low = mid + 1;
        else
            high = mid;
    }
    for (std::size_t i = low; i <= high; ++i) {
        rec.compare();
        if constexpr (R::tracing)
            rec.probe(ArrayId::column_keys, static_cast<std::uint64_t>(i) * sizeof(key_type));
        if (col.keys[i] >= key) {
            if (col.keys[i] == key)
                return {true, col.values[i]};
            return {false, 0};
        }
    }
    return {false, 0};
}

template <typename R>
SearchResult binary_search(const SortedColumn& col, key_type key, const BinarySearchConfig& cfg,
                           R& rec) {
    if (col.size() == 0)
        return {false, 0};
    return binary_search_range(col, 0, col.size() - 1, key, cfg, rec);
}

inline SearchResult binary_search(const SortedColumn& col, key_type key,
                                  const BinarySearchConfig& cfg = {}) {
    NullRecorder rec;
    return binary_search(col, key, cfg, rec);
}

//! Exact search within one leaf block of the padded column: positions
//! [start, start + count) where positions at and beyond the column size are
//! sentinel padding. The partition kernel narrows to the first key not
//! below the query, then one equality check decides.
template <typename R>
SearchResult leaf_block_search(const SortedColumn& col, std::uint64_t start, std::size_t count,
                               key_type key, R& rec) {
    const std::uint64_t n = col.size();
    if (start >= n)
        return {false, 0};
    const auto real = static_cast<std::size_t>(
        std::min<std::uint64_t>(count, n - start));
    const std::size_t off = branch_by_key_ranges(col.keys.data() + start, real, key,
                                                 ArrayId::column_keys,
                                                 start * sizeof(key_type), rec);
    if (off < real) {
        const std::uint64_t pos = start + off;
        rec.compare();
        if constexpr (R::tracing)
            rec.probe(ArrayId::column_keys, pos * sizeof(key_type));
        if (col.keys[pos] == key)
            return {true, col.values[pos]};
    }
    return {false, 0};
}

} // namespace nitro
