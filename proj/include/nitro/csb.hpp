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

//! Cache-sensitive B+ tree. Same bulk-loaded geometry as BPlusTree, but a
//! node keeps a single reference: all its children sit contiguously in the
//! level below, and child c lives at first_child + c. Leaves hold the
//! tuples without chain links.
struct CsbTree {
    std::size_t fanout = 16;
    std::size_t leaf_keys = 64;

    struct InnerLevel {
        std::size_t width = 0;
        std::vector<key_type> keys;             // node o at [o*(fanout-1), ...)
        std::vector<std::uint32_t> first_child; // start of the contiguous child group
        std::vector<std::uint32_t> key_count;
    };
    std::vector<InnerLevel> levels; // [0] is the root level

    std::size_t leaf_count = 0;
    std::vector<key_type> leaf_key_slots;
    std::vector<value_type> leaf_values;

    std::size_t depth() const { return levels.size(); }

    //! Modeled layout for access tracing: keys first, then the one child
    //! reference, padded to a power-of-two stride.
    std::uint64_t inner_stride() const {
        return next_pow2((fanout - 1) * sizeof(key_type) + 8);
    }
    std::uint64_t leaf_stride() const {
        return next_pow2(leaf_keys * (sizeof(key_type) + sizeof(value_type)));
    }
    std::uint64_t inner_ordinal(std::size_t level, std::size_t node) const {
        std::uint64_t g = node;
        for (std::size_t l = 0; l < level; ++l)
            g += levels[l].width;
        return g;
    }
};

inline CsbTree build_csb(const SortedColumn& col, std::size_t fanout = 16,
                         std::size_t leaf_keys = 64) {
    if (fanout < 2)
        throw std::invalid_argument("build_csb: fanout must be at least 2");
    if (leaf_keys < 1)
        throw std::invalid_argument("build_csb: leaf_keys must be at least 1");

    CsbTree t;
    t.fanout = fanout;
    t.leaf_keys = leaf_keys;

    const std::size_t n = col.size();
    t.leaf_count = n == 0 ? 1 : (n + leaf_keys - 1) / leaf_keys;
    t.leaf_key_slots.assign(t.leaf_count * leaf_keys + 3, max_sentinel);
    t.leaf_values.assign(t.leaf_count * leaf_keys, 0);
    for (std::size_t i = 0; i < n; ++i) {
        t.leaf_key_slots[i] = col.keys[i];
        t.leaf_values[i] = col.values[i];
    }

    std::vector<key_type> maxes(t.leaf_count, max_sentinel);
    if (n > 0)
        for (std::size_t i = 0; i < t.leaf_count; ++i)
            maxes[i] = col.keys[std::min(n, (i + 1) * leaf_keys) - 1];

    std::size_t width = t.leaf_count;
    while (width > 1) {
        const std::size_t parent_width = (width + fanout - 1) / fanout;
        CsbTree::InnerLevel lvl;
        lvl.width = parent_width;
        lvl.keys.assign(parent_width * (fanout - 1) + 3, max_sentinel);
        lvl.first_child.assign(parent_width, 0);
        lvl.key_count.assign(parent_width, 0);
        std::vector<key_type> parent_maxes(parent_width);
        for (std::size_t o = 0; o < parent_width; ++o) {
            const std::size_t first = o * fanout;
            const std::size_t last = std::min(width, first + fanout);
            lvl.first_child[o] = static_cast<std::uint32_t>(first);
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

//! Same descent as bplus_search; the child is addressed arithmetically off
//! the node's single reference.
template <typename R>
SearchResult csb_search(const CsbTree& t, key_type key, R& rec) {
    const std::size_t f = t.fanout;
    std::size_t node = 0;
    for (std::size_t l = 0; l < t.levels.size(); ++l) {
        const auto& lvl = t.levels[l];
        rec.step();
        const std::uint64_t base = t.inner_ordinal(l, node) * t.inner_stride();
        const std::size_t b =
            branch_by_key_ranges(lvl.keys.data() + node * (f - 1), lvl.key_count[node], key,
                                 ArrayId::csb_internal, base, rec);
        rec.branch_taken(b);
        node = lvl.first_child[node] + b;
    }
    const std::size_t slot0 = node * t.leaf_keys;
    const std::uint64_t leaf_base = static_cast<std::uint64_t>(node) * t.leaf_stride();
    const std::size_t off = branch_by_key_ranges(t.leaf_key_slots.data() + slot0, t.leaf_keys,
                                                 key, ArrayId::csb_leaves, leaf_base, rec);
    if (off < t.leaf_keys) {
        rec.compare();
        if constexpr (R::tracing)
            rec.probe(ArrayId::csb_leaves, leaf_base + off * sizeof(key_type));
        if (t.leaf_key_slots[slot0 + off] == key)
            return {true, t.leaf_values[slot0 + off]};
    }
    return {false, 0};
}

inline SearchResult csb_search(const CsbTree& t, key_type key) {
    NullRecorder rec;
    return csb_search(t, key, rec);
}

} // namespace nitro
