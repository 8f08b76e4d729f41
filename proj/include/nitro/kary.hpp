#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nitro/binary_search.hpp"
#include "nitro/column.hpp"
#include "nitro/trace.hpp"

namespace nitro {

//! Sorted column rearranged as a linearized complete (k+1)-ary tree.
//!
//! Every node holds k keys; the root is node 0 and child c of node i is
//! node i*(k+1) + c + 1. An in-order walk of the node tree visits the
//! column in ascending order, with sentinel padding occupying the positions
//! past the column size. perm maps each node slot back to its position in
//! that padded sorted order, so non-sentinel slots map onto the column.
struct KaryTree {
    std::size_t k = 4;          // keys per node; node fanout is k + 1
    std::size_t depth = 0;      // node levels on the path of every search
    std::size_t node_count = 0;
    std::vector<key_type> slots;        // node i keys at [i*k, i*k + k)
    std::vector<std::uint64_t> perm;    // slot -> padded sorted position

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline KaryTree build_kary(const SortedColumn& col, std::size_t k = 4) {
    if (k < 1)
        throw std::invalid_argument("build_kary: k must be at least 1");
    KaryTree t;
    t.k = k;

    // capacity per depth: cap(d) = (k+1)^d - 1 key slots
    std::vector<std::uint64_t> cap = {0};
    while (cap.back() < col.size()) {
        cap.push_back(cap.back() * (k + 1) + k);
        ++t.depth;
    }
    t.node_count = static_cast<std::size_t>(cap.back() / k);
    t.slots.assign(t.node_count * k + 3, max_sentinel); // tail slack for 4-lane loads
    t.perm.assign(t.node_count * k, 0);

    if (t.depth == 0)
        return t;

    const auto fill = [&](auto&& self, std::size_t node, std::size_t levels,
                          std::uint64_t base) -> void {
        const std::uint64_t child_cap = cap[levels - 1];
        for (std::size_t j = 0; j < k; ++j) {
            const std::uint64_t pos = base + (j + 1) * child_cap + j;
            t.slots[node * k + j] = col.padded_key(pos);
            t.perm[node * k + j] = pos;
        }
        if (levels == 1)
            return;
        for (std::size_t c = 0; c <= k; ++c)
            self(self, node * (k + 1) + c + 1, levels - 1, base + c * (child_cap + 1));
    };
    fill(fill, 0, t.depth, 0);
    return t;
}

//! Descends all depth levels, partitioning by branch_by_key_ranges at each
//! node. There is no early exit: a slot matching the query is remembered
//! and resolved after the last level, so every search performs exactly
//! depth node steps. Duplicate keys may match at several levels; any of
//! them is a valid answer.
template <typename R>
SearchResult kary_search(const KaryTree& t, const SortedColumn& col, key_type key, R& rec,
                         bool use_simd = simd_available) {
    std::size_t node = 0;
    std::size_t hit_slot = KaryTree::npos;
    for (std::size_t level = 0; level < t.depth; ++level) {
        rec.step();
        const std::size_t slot0 = node * t.k;
        const key_type* nk = t.slots.data() + slot0;
        const std::size_t b =
            branch_in_node(nk, t.k, key, use_simd, ArrayId::kary_nodes,
                           static_cast<std::uint64_t>(slot0) * sizeof(key_type), rec);
        rec.branch_taken(b);
        if (b < t.k && nk[b] == key)
            hit_slot = slot0 + b;
        node = node * (t.k + 1) + b + 1;
    }
    if (hit_slot != KaryTree::npos)
        return {true, col.values[t.perm[hit_slot]]};
    return {false, 0};
}

inline SearchResult kary_search(const KaryTree& t, const SortedColumn& col, key_type key) {
    NullRecorder rec;
    return kary_search(t, col, key, rec);
}

} // namespace nitro
