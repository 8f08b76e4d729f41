#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nitro/binary_search.hpp"
#include "nitro/column.hpp"
#include "nitro/trace.hpp"
#include "nitro/util.hpp"

namespace nitro {

//! Bulk-loaded B+ tree. Inner nodes hold up to fanout-1 separators and one
//! reference per child; leaves hold up to leaf_keys tuples and are chained
//! in ascending order. Every separator is the largest key of the subtree
//! left of it, so queries equal to a separator descend left and find their
//! tuple in a leaf.
//!
//! Nodes live in per-level arenas: child references index the next level
//! down, the lowest inner level references leaves. Key slots beyond a
//! node's fill are sentinel padding.
struct BPlusTree {
    std::size_t fanout = 16;
    std::size_t leaf_keys = 64;

    struct InnerLevel {
        std::size_t width = 0;                 // nodes in this level
        std::vector<key_type> keys;            // node o at [o*(fanout-1), ...)
        std::vector<std::uint32_t> child;      // node o at [o*fanout, ...)
        std::vector<std::uint32_t> key_count;  // separators per node
    };
    std::vector<InnerLevel> levels;            // [0] is the root level

    std::size_t leaf_count = 0;
    std::vector<key_type> leaf_key_slots;      // leaf i at [i*leaf_keys, ...)
    std::vector<value_type> leaf_values;
    std::vector<std::uint32_t> leaf_next;      // ascending chain, npos32 at the tail

    static constexpr std::uint32_t npos32 = static_cast<std::uint32_t>(-1);

    std::size_t depth() const { return levels.size(); }

    //! Modeled memory layout for access tracing: one arena per node kind,
    //! a node's keys first, then its child references (8 bytes each), the
    //! whole node padded to a power-of-two stride.
    std::uint64_t inner_stride() const {
        return next_pow2((fanout - 1) * sizeof(key_type) + fanout * 8);
    }
    std::uint64_t leaf_stride() const {
        return next_pow2(leaf_keys * (sizeof(key_type) + sizeof(value_type)) + 8);
    }
    //! Global breadth-first ordinal of a node, for arena offsets.
    std::uint64_t inner_ordinal(std::size_t level, std::size_t node) const {
        std::uint64_t g = node;
        for (std::size_t l = 0; l < level; ++l)
            g += levels[l].width;
        return g;
    }
};

inline BPlusTree build_bplus(const SortedColumn& col, std::size_t fanout = 16,
                             std::size_t leaf_keys = 64) {
    if (fanout < 2)
        throw std::invalid_argument("build_bplus: fanout must be at least 2");
    if (leaf_keys < 1)
        throw std::invalid_argument("build_bplus: leaf_keys must be at least 1");

    BPlusTree t;
    t.fanout = fanout;
    t.leaf_keys = leaf_keys;

    const std::size_t n = col.size();
    t.leaf_count = n == 0 ? 1 : (n + leaf_keys - 1) / leaf_keys;
    t.leaf_key_slots.assign(t.leaf_count * leaf_keys + 3, max_sentinel);
    t.leaf_values.assign(t.leaf_count * leaf_keys, 0);
    t.leaf_next.assign(t.leaf_count, BPlusTree::npos32);
    for (std::size_t i = 0; i < n; ++i) {
        t.leaf_key_slots[i] = col.keys[i];
        t.leaf_values[i] = col.values[i];
    }
    for (std::size_t i = 0; i + 1 < t.leaf_count; ++i)
        t.leaf_next[i] = static_cast<std::uint32_t>(i + 1);

    // ascending per-subtree maxima feed the separators of the level above
    std::vector<key_type> maxes(t.leaf_count, max_sentinel);
    if (n > 0)
        for (std::size_t i = 0; i < t.leaf_count; ++i)
            maxes[i] = col.keys[std::min(n, (i + 1) * leaf_keys) - 1];

    std::size_t width = t.leaf_count;
    while (width > 1) {
        const std::size_t parent_width = (width + fanout - 1) / fanout;
        BPlusTree::InnerLevel lvl;
        lvl.width = parent_width;
        lvl.keys.assign(parent_width * (fanout - 1) + 3, max_sentinel);
        lvl.child.assign(parent_width * fanout, BPlusTree::npos32);
        lvl.key_count.assign(parent_width, 0);
        std::vector<key_type> parent_maxes(parent_width);
        for (std::size_t o = 0; o < parent_width; ++o) {
            const std::size_t first = o * fanout;
            const std::size_t last = std::min(width, first + fanout);
            for (std::size_t c = first; c < last; ++c)
                lvl.child[o * fanout + (c - first)] = static_cast<std::uint32_t>(c);
            for (std::size_t j = 0; j + 1 < last - first; ++j)
                lvl.keys[o * (fanout - 1) + j] = maxes[first + j];
            lvl.key_count[o] = static_cast<std::uint32_t>(last - first - 1);
            parent_maxes[o] = maxes[last - 1];
        }
        t.levels.push_back(std::move(lvl));
        maxes = std::move(parent_maxes);
        width = parent_width;
    }
    std::reverse(t.levels.begin(), t.levels.end());
    return t;
}

//! Descends by key-range partitioning at each inner node, then searches the
//! reached leaf exactly.
template <typename R>
SearchResult bplus_search(const BPlusTree& t, key_type key, R& rec) {
    const std::size_t f = t.fanout;
    std::size_t node = 0;
    for (std::size_t l = 0; l < t.levels.size(); ++l) {
        const auto& lvl = t.levels[l];
        rec.step();
        const std::uint64_t base =
            t.inner_ordinal(l, node) * t.inner_stride();
        const std::size_t b =
            branch_by_key_ranges(lvl.keys.data() + node * (f - 1), lvl.key_count[node], key,
                                 ArrayId::bplus_internal, base, rec);
        rec.branch_taken(b);
        node = lvl.child[node * f + b];
    }
    const std::size_t slot0 = node * t.leaf_keys;
    const std::uint64_t leaf_base = static_cast<std::uint64_t>(node) * t.leaf_stride();
    const std::size_t off = branch_by_key_ranges(t.leaf_key_slots.data() + slot0, t.leaf_keys,
                                                 key, ArrayId::bplus_leaves, leaf_base, rec);
    if (off < t.leaf_keys) {
        rec.compare();
        if constexpr (R::tracing)
            rec.probe(ArrayId::bplus_leaves, leaf_base + off * sizeof(key_type));
        if (t.leaf_key_slots[slot0 + off] == key)
            return {true, t.leaf_values[slot0 + off]};
    }
    return {false, 0};
}

inline SearchResult bplus_search(const BPlusTree& t, key_type key) {
    NullRecorder rec;
    return bplus_search(t, key, rec);
}

} // namespace nitro
