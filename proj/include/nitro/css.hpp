#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "nitro/binary_search.hpp"
#include "nitro/column.hpp"
#include "nitro/io.hpp"
#include "nitro/trace.hpp"
#include "nitro/util.hpp"

namespace nitro {

//! Cache-sensitive search tree: a complete fanout-ary separator tree stored
//! as one array in breadth-first order, with no child pointers. Child c of
//! node i is node i*fanout + c + 1; after depth descents the node index,
//! shifted by the internal node count, is the leaf block index into the
//! column. Leaves are the column itself in blocks of leaf_keys positions.
//!
//! The tree covers the column padded to leaf_keys * fanout^depth positions;
//! separators at padded boundaries are sentinels, so the branch arithmetic
//! needs no bounds checks. In storage each node is padded from fanout-1 key
//! slots to a power-of-two stride, which keeps nodes of up to a cache line
//! from straddling line boundaries.
struct CssTree {
    std::size_t fanout = 16;
    std::size_t leaf_keys = 64;     // column positions per leaf block
    std::size_t depth = 0;          // internal levels
    std::size_t node_count = 0;     // internal nodes
    std::size_t stride = 0;         // key slots per node in storage
    std::vector<key_type> internal; // node i keys at [i*stride, i*stride + fanout-1)

    key_type separator(std::size_t node, std::size_t j) const {
        return internal[node * stride + j];
    }
};

//! Builds the separator array for a column. min_depth forces at least that
//! many internal levels (used to align geometry with other layouts); the
//! natural depth is the smallest d with leaf_keys * fanout^d >= column size.
inline CssTree build_css(const SortedColumn& col, std::size_t fanout = 16,
                         std::size_t leaf_keys = 64, std::size_t min_depth = 0) {
    if (fanout < 2)
        throw std::invalid_argument("build_css: fanout must be at least 2");
    if (leaf_keys < 1)
        throw std::invalid_argument("build_css: leaf_keys must be at least 1");

    CssTree t;
    t.fanout = fanout;
    t.leaf_keys = leaf_keys;
    t.stride = static_cast<std::size_t>(next_pow2(fanout - 1));

    std::uint64_t leaf_span = leaf_keys; // column positions under one node at the current depth
    while (leaf_span < col.size() || t.depth < min_depth) {
        leaf_span *= fanout;
        ++t.depth;
    }
    std::uint64_t nodes = 0, level_width = 1;
    for (std::size_t l = 0; l < t.depth; ++l) {
        nodes += level_width;
        level_width *= fanout;
    }
    t.node_count = static_cast<std::size_t>(nodes);
    t.internal.assign(t.node_count * t.stride + 3, max_sentinel);

    std::size_t node = 0;
    std::uint64_t span = leaf_span, width = 1;
    for (std::size_t l = 0; l < t.depth; ++l) {
        const std::uint64_t child_span = span / fanout;
        for (std::uint64_t o = 0; o < width; ++o, ++node) {
            const std::uint64_t base = o * span;
            for (std::size_t j = 0; j + 1 < fanout; ++j)
                t.internal[node * t.stride + j] = col.padded_key(base + (j + 1) * child_span - 1);
        }
        span = child_span;
        width *= fanout;
    }
    return t;
}

//! Resumes a search at a given node and internal level; a full search
//! starts at the root. Descent costs one node step per level; the leaf
//! block reached is searched exactly within the column.
template <typename R>
SearchResult css_search_from(const CssTree& t, const SortedColumn& col, key_type key,
                             std::uint64_t node, std::size_t level, R& rec) {
    for (std::size_t l = level; l < t.depth; ++l) {
        rec.step();
        const std::uint64_t slot0 = node * t.stride;
        const std::size_t b =
            branch_by_key_ranges(t.internal.data() + slot0, t.fanout - 1, key,
                                 ArrayId::css_internal, slot0 * sizeof(key_type), rec);
        rec.branch_taken(b);
        node = node * t.fanout + b + 1;
    }
    const std::uint64_t leaf = node - t.node_count;
    return leaf_block_search(col, leaf * t.leaf_keys, t.leaf_keys, key, rec);
}

template <typename R>
SearchResult css_search(const CssTree& t, const SortedColumn& col, key_type key, R& rec) {
    return css_search_from(t, col, key, 0, 0, rec);
}

inline SearchResult css_search(const CssTree& t, const SortedColumn& col, key_type key) {
    NullRecorder rec;
    return css_search(t, col, key, rec);
}

inline constexpr char css_magic[4] = {'C', 'S', 'S', '1'};

//! Serializes tree and column as: magic "CSS1", u32 fanout, u32 leaf_keys,
//! u32 depth, u64 column size, the internal separators packed at fanout-1
//! keys per node (exactly node_count*(fanout-1)*4 bytes), then the column
//! in its own file format.
inline void write_css(const CssTree& t, const SortedColumn& col, std::ostream& os) {
    os.write(css_magic, 4);
    detail::put_u32(os, static_cast<std::uint32_t>(t.fanout));
    detail::put_u32(os, static_cast<std::uint32_t>(t.leaf_keys));
    detail::put_u32(os, static_cast<std::uint32_t>(t.depth));
    detail::put_u64(os, col.size());
    for (std::size_t i = 0; i < t.node_count; ++i)
        for (std::size_t j = 0; j + 1 < t.fanout; ++j)
            detail::put_u32(os, t.separator(i, j));
    write_column(col, os);
}

//! Size in bytes of the serialized separator region.
inline std::uint64_t css_serialized_internal_bytes(const CssTree& t) {
    return static_cast<std::uint64_t>(t.node_count) * (t.fanout - 1) * sizeof(key_type);
}

//! Reads a stream written by write_css and validates the header geometry
//! against the column it carries.
inline std::pair<CssTree, SortedColumn> read_css(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != std::string(css_magic, 4))
        throw std::runtime_error("css file: bad magic");
    CssTree t;
    t.fanout = detail::get_u32(is);
    t.leaf_keys = detail::get_u32(is);
    t.depth = detail::get_u32(is);
    const std::uint64_t n = detail::get_u64(is);
    if (t.fanout < 2 || t.leaf_keys < 1)
        throw std::runtime_error("css file: bad geometry");

    std::uint64_t nodes = 0, width = 1, leaf_span = t.leaf_keys;
    for (std::size_t l = 0; l < t.depth; ++l) {
        nodes += width;
        width *= t.fanout;
        leaf_span *= t.fanout;
    }
    if (leaf_span < n)
        throw std::runtime_error("css file: depth too small for column");
    t.node_count = static_cast<std::size_t>(nodes);
    t.stride = static_cast<std::size_t>(next_pow2(t.fanout - 1));
    t.internal.assign(t.node_count * t.stride + 3, max_sentinel);
    for (std::size_t i = 0; i < t.node_count; ++i)
        for (std::size_t j = 0; j + 1 < t.fanout; ++j)
            t.internal[i * t.stride + j] = detail::get_u32(is);

    SortedColumn col = read_column(is);
    if (col.size() != n)
        throw std::runtime_error("css file: column size mismatch");
    return {std::move(t), std::move(col)};
}

} // namespace nitro
