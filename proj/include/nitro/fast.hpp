#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nitro/binary_search.hpp"
#include "nitro/column.hpp"
#include "nitro/trace.hpp"
#include "nitro/util.hpp"
#include "nitro/workload.hpp"

namespace nitro {

//! Blocking parameters of the hierarchically blocked search tree. A SIMD
//! node packs ds binary levels of separators, a cache-line node packs dc
//! SIMD levels, a page node packs dp cache-line levels. With the defaults
//! (2, 2, 2): 3 keys per SIMD node; 5 SIMD nodes, 15 keys, 60 key bytes per
//! line node; 17 line nodes, 255 keys, 1020 key bytes and fanout 256 per
//! page node.
struct FastParams {
    std::size_t ds = 2;
    std::size_t dc = 2;
    std::size_t dp = 2;

    std::size_t simd_fanout() const { return std::size_t{1} << ds; }           // fS
    std::size_t keys_per_simd_node() const { return simd_fanout() - 1; }
    std::size_t line_fanout() const { return pow_n(simd_fanout(), dc); }       // fC
    std::size_t simd_nodes_per_line_node() const {
        return (line_fanout() - 1) / (simd_fanout() - 1);
    }
    std::size_t keys_per_line_node() const { return line_fanout() - 1; }
    std::size_t line_node_key_bytes() const {
        return keys_per_line_node() * sizeof(key_type);
    }
    std::size_t page_fanout() const { return pow_n(line_fanout(), dp); }       // fP
    std::size_t line_nodes_per_page_node() const {
        return (page_fanout() - 1) / (line_fanout() - 1);
    }
    std::size_t keys_per_page_node() const { return page_fanout() - 1; }
    std::size_t page_node_key_bytes() const {
        return keys_per_page_node() * sizeof(key_type);
    }
    //! Binary levels spanned by one page node.
    std::size_t binary_levels_per_page() const { return ds * dc * dp; }

    static std::size_t pow_n(std::size_t b, std::size_t e) {
        std::size_t r = 1;
        while (e--)
            r *= b;
        return r;
    }
};

inline constexpr std::size_t fast_default_leaf_keys = 16;

//! Separator tree with hierarchical blocking. Logically this is the same
//! complete fS-ary separator tree a CssTree with fanout fS would build over
//! the column, but the storage order is blocked: page nodes breadth-first,
//! line nodes breadth-first within their page, SIMD nodes breadth-first
//! within their line node, separators ascending within a SIMD node.
//!
//! Strides are padded to powers of two, so line nodes never straddle cache
//! lines and page nodes never straddle memory pages.
struct FastTree {
    FastParams p;
    std::size_t leaf_keys = fast_default_leaf_keys; // column positions per leaf block
    std::size_t page_levels = 0;                    // m
    std::size_t simd_levels = 0;                    // m * dc * dp
    std::size_t page_count = 0;
    std::size_t line_stride = 0;                    // key slots per line node
    std::size_t page_stride = 0;                    // key slots per page node
    std::vector<key_type> slots;

    //! Storage slot of the first key of a SIMD node, addressed by global
    //! SIMD level and breadth-first ordinal within that level.
    std::uint64_t node_slot(std::size_t level, std::uint64_t ordinal) const {
        const std::size_t per_page = p.dc * p.dp;
        const std::size_t page_level = level / per_page;
        const std::size_t w = level % per_page;
        const std::uint64_t within = FastParams::pow_n(p.simd_fanout(), w);
        const std::uint64_t page_root_ord = ordinal / within;
        const std::uint64_t page_index =
            tree_level_start(p.page_fanout(), page_level) + page_root_ord;
        const std::uint64_t in_page = ordinal % within;

        const std::size_t line_level = w / p.dc;
        const std::size_t below_line = w - line_level * p.dc;
        const std::uint64_t line_span = FastParams::pow_n(p.simd_fanout(), below_line);
        const std::uint64_t line_root_ord = in_page / line_span;
        const std::uint64_t line_index =
            tree_level_start(p.line_fanout(), line_level) + line_root_ord;
        const std::uint64_t in_line = in_page % line_span;

        const std::uint64_t simd_index =
            tree_level_start(p.simd_fanout(), below_line) + in_line;

        return page_index * page_stride + line_index * line_stride +
               simd_index * p.keys_per_simd_node();
    }

    static std::uint64_t tree_level_start(std::uint64_t fanout, std::size_t level) {
        std::uint64_t start = 0, width = 1;
        for (std::size_t l = 0; l < level; ++l) {
            start += width;
            width *= fanout;
        }
        return start;
    }
};

//! Builds the blocked tree over a column. The total binary depth is the
//! smallest multiple of ds*dc*dp whose leaf count times leaf_keys covers
//! the column, i.e. the tree always consists of whole page levels.
inline FastTree build_fast(const SortedColumn& col, FastParams p = {},
                           std::size_t leaf_keys = fast_default_leaf_keys) {
    if (p.ds < 1 || p.dc < 1 || p.dp < 1)
        throw std::invalid_argument("build_fast: blocking depths must be at least 1");
    if (p.binary_levels_per_page() > 20)
        throw std::invalid_argument("build_fast: page spans too many binary levels");
    if (leaf_keys < 1)
        throw std::invalid_argument("build_fast: leaf_keys must be at least 1");

    FastTree t;
    t.p = p;
    t.leaf_keys = leaf_keys;
    t.line_stride = static_cast<std::size_t>(next_pow2(p.keys_per_line_node()));
    t.page_stride = static_cast<std::size_t>(
        next_pow2(p.line_nodes_per_page_node() * t.line_stride));

    const std::size_t per_page_simd = p.dc * p.dp;
    std::uint64_t leaf_blocks = 1; // fS^simd_levels
    while (leaf_blocks * leaf_keys < col.size()) {
        for (std::size_t i = 0; i < per_page_simd; ++i)
            leaf_blocks *= p.simd_fanout();
        t.simd_levels += per_page_simd;
        ++t.page_levels;
    }
    t.page_count = static_cast<std::size_t>(
        FastTree::tree_level_start(p.page_fanout(), t.page_levels));
    t.slots.assign(t.page_count * t.page_stride + 3, max_sentinel);

    std::uint64_t span = leaf_blocks * leaf_keys; // column positions under one node
    std::uint64_t width = 1;
    for (std::size_t level = 0; level < t.simd_levels; ++level) {
        const std::uint64_t child_span = span / p.simd_fanout();
        for (std::uint64_t o = 0; o < width; ++o) {
            const std::uint64_t slot = t.node_slot(level, o);
            const std::uint64_t base = o * span;
            for (std::size_t j = 0; j + 1 < p.simd_fanout(); ++j)
                t.slots[slot + j] = col.padded_key(base + (j + 1) * child_span - 1);
        }
        span = child_span;
        width *= p.simd_fanout();
    }
    return t;
}

//! Descends page by page. Within a page, SIMD-node branches accumulate into
//! the line-node branch (b1*fS + b2 for two SIMD levels), line branches
//! accumulate into the page branch, and the next page index is
//! page*fP + page_branch + 1, mirroring the pointer-free child arithmetic
//! of the linearized trees. The surviving leaf block of the column is then
//! searched exactly.
template <typename R>
SearchResult fast_search(const FastTree& t, const SortedColumn& col, key_type key, R& rec,
                         bool use_simd = simd_available) {
    const FastParams& p = t.p;
    const std::size_t fS = p.simd_fanout();
    const std::size_t kS = p.keys_per_simd_node();
    std::uint64_t page = 0;
    std::uint64_t leaf = 0;
    for (std::size_t pl = 0; pl < t.page_levels; ++pl) {
        const std::uint64_t page_slot = page * t.page_stride;
        std::uint64_t line = 0;
        std::uint64_t page_branch = 0;
        for (std::size_t ll = 0; ll < p.dp; ++ll) {
            const std::uint64_t line_slot = page_slot + line * t.line_stride;
            std::uint64_t simd = 0;
            std::uint64_t line_branch = 0;
            for (std::size_t sl = 0; sl < p.dc; ++sl) {
                rec.step();
                const std::uint64_t slot = line_slot + simd * kS;
                const std::size_t b =
                    branch_in_node(t.slots.data() + slot, kS, key, use_simd,
                                   ArrayId::fast_nodes, slot * sizeof(key_type), rec);
                rec.branch_taken(b);
                simd = simd * fS + b + 1;
                line_branch = line_branch * fS + b;
            }
            line = line * p.line_fanout() + line_branch + 1;
            page_branch = page_branch * p.line_fanout() + line_branch;
        }
        page = page * p.page_fanout() + page_branch + 1;
        leaf = leaf * p.page_fanout() + page_branch;
    }
    return leaf_block_search(col, leaf * t.leaf_keys, t.leaf_keys, key, rec);
}

inline SearchResult fast_search(const FastTree& t, const SortedColumn& col, key_type key) {
    NullRecorder rec;
    return fast_search(t, col, key, rec);
}

//! One row of the feature ablation: which blocking layers and which node
//! search were active, and what they cost per lookup.
struct FastFeatureRow {
    std::size_t ds = 0, dc = 0, dp = 0;
    bool simd_on = false, clb_on = false, pgb_on = false;
    double ns_per_lookup = 0;
    double cmp_per_lookup = 0;
    double lines_per_lookup = 0;
    double pages_per_lookup = 0;
};

inline std::string fast_feature_csv_header() {
    return "ds,dc,dp,simd_on,clb_on,pgb_on,ns_per_lookup,cmp_per_lookup,"
           "lines_per_lookup,pages_per_lookup";
}

inline std::string to_csv(const FastFeatureRow& r) {
    return std::to_string(r.ds) + "," + std::to_string(r.dc) + "," + std::to_string(r.dp) +
           "," + std::to_string(r.simd_on ? 1 : 0) + "," + std::to_string(r.clb_on ? 1 : 0) +
           "," + std::to_string(r.pgb_on ? 1 : 0) + "," + std::to_string(r.ns_per_lookup) +
           "," + std::to_string(r.cmp_per_lookup) + "," + std::to_string(r.lines_per_lookup) +
           "," + std::to_string(r.pages_per_lookup);
}

//! Ablation over the three features: SIMD node search on/off, cache-line
//! blocking on/off (off collapses dc to 1), page blocking on/off (off
//! collapses dp to 1). With everything off the layout degenerates to a
//! plain linearized fS-ary tree searched scalarly. Medians of the trace
//! columns are taken over a sample of the stream.
inline std::vector<FastFeatureRow> fast_feature_report(
    const SortedColumn& col, const Workload& w, FastParams base = {},
    std::size_t leaf_keys = fast_default_leaf_keys, std::size_t trace_sample = 4096) {
    const std::vector<key_type> queries = generate_queries(col, w);
    std::vector<FastFeatureRow> rows;
    for (int mask = 7; mask >= 0; --mask) {
        const bool simd_on = mask & 4, clb_on = mask & 2, pgb_on = mask & 1;
        FastParams p = base;
        if (!clb_on)
            p.dc = 1;
        if (!pgb_on)
            p.dp = 1;
        const FastTree t = build_fast(col, p, leaf_keys);

        FastFeatureRow row;
        row.ds = p.ds;
        row.dc = p.dc;
        row.dp = p.dp;
        row.simd_on = simd_on;
        row.clb_on = clb_on;
        row.pgb_on = pgb_on;

        if (!queries.empty()) {
            NullRecorder null;
            std::uint64_t sink = 0;
            const auto t0 = std::chrono::steady_clock::now();
            for (const key_type q : queries) {
                const SearchResult r = fast_search(t, col, q, null, simd_on);
                sink += r.found ? r.value : 0;
            }
            const auto t1 = std::chrono::steady_clock::now();
            volatile std::uint64_t keep = sink;
            (void)keep;
            row.ns_per_lookup =
                std::chrono::duration<double, std::nano>(t1 - t0).count() /
                static_cast<double>(queries.size());

            const std::size_t sample = std::min(trace_sample, queries.size());
            std::vector<std::uint64_t> lines, pages, cmps;
            lines.reserve(sample);
            pages.reserve(sample);
            cmps.reserve(sample);
            for (std::size_t i = 0; i < sample; ++i) {
                auto [r, tr] = traced([&](AccessTrace& rec) {
                    return fast_search(t, col, queries[i], rec, simd_on);
                });
                (void)r;
                lines.push_back(tr.distinct_lines());
                pages.push_back(tr.distinct_pages());
                cmps.push_back(tr.comparisons);
            }
            row.lines_per_lookup = static_cast<double>(median_of(lines));
            row.pages_per_lookup = static_cast<double>(median_of(pages));
            row.cmp_per_lookup = static_cast<double>(median_of(cmps));
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace nitro
