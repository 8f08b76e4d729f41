#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nitro/column.hpp"

namespace nitro {

//! Arrays a search may touch. Each array is modeled as starting on its own
//! page boundary, so locations in different arrays never share a cache line
//! or a memory page.
enum class ArrayId : std::uint8_t {
    column_keys = 0,
    column_values,
    css_internal,
    kary_nodes,
    fast_nodes,
    bplus_internal,
    bplus_leaves,
    csb_internal,
    csb_leaves,
};

//! Recorder concept. Search functions call these hooks; the default
//! recorder compiles to nothing. probe() reports a key read at a byte
//! offset within an array, compare() a key comparison, step() one
//! range-narrowing or node-visit step, branch_taken() the child partition
//! chosen at an inner node.
struct NullRecorder {
    static constexpr bool tracing = false;
    void probe(ArrayId, std::uint64_t) {}
    void compare(std::uint64_t = 1) {}
    void step() {}
    void branch_taken(std::size_t) {}
};

//! Counts steps and comparisons without tracking memory locations.
struct StepCounter {
    static constexpr bool tracing = false;
    std::uint64_t steps = 0;
    std::uint64_t comparisons = 0;
    void probe(ArrayId, std::uint64_t) {}
    void compare(std::uint64_t c = 1) { comparisons += c; }
    void step() { ++steps; }
    void branch_taken(std::size_t) {}
};

//! Collects the sequence of child partitions chosen at inner nodes.
struct BranchLog {
    static constexpr bool tracing = false;
    std::vector<std::size_t> branches;
    void probe(ArrayId, std::uint64_t) {}
    void compare(std::uint64_t = 1) {}
    void step() {}
    void branch_taken(std::size_t b) { branches.push_back(b); }
};

//! Full access trace of one search: distinct cache lines and pages touched
//! by key reads, plus comparison and step counts. Line and page ids are
//! derived from byte offsets relative to the owning array's base.
struct AccessTrace {
    static constexpr bool tracing = true;

    std::uint64_t line_bytes = 64;
    std::uint64_t page_bytes = 4096;
    std::uint64_t comparisons = 0;
    std::uint64_t steps = 0;

    void probe(ArrayId a, std::uint64_t byte_offset) {
        insert_unique(lines_, encode(a, byte_offset / line_bytes));
        insert_unique(pages_, encode(a, byte_offset / page_bytes));
    }
    void compare(std::uint64_t c = 1) { comparisons += c; }
    void step() { ++steps; }
    void branch_taken(std::size_t) {}

    std::size_t distinct_lines() const { return lines_.size(); }
    std::size_t distinct_pages() const { return pages_.size(); }

    const std::vector<std::uint64_t>& line_ids() const { return lines_; }
    const std::vector<std::uint64_t>& page_ids() const { return pages_; }

    static std::uint64_t encode(ArrayId a, std::uint64_t idx) {
        return static_cast<std::uint64_t>(a) << 56 | idx;
    }

private:
    static void insert_unique(std::vector<std::uint64_t>& v, std::uint64_t x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it == v.end() || *it != x)
            v.insert(it, x);
    }

    std::vector<std::uint64_t> lines_;
    std::vector<std::uint64_t> pages_;
};

//! Runs one search under a fresh AccessTrace and returns both the result
//! and the trace:
//!   auto [r, t] = traced([&](auto& rec) { return css_search(tree, col, key, rec); });
template <typename SearchFn>
std::pair<SearchResult, AccessTrace> traced(SearchFn&& fn) {
    AccessTrace t;
    SearchResult r = fn(t);
    return {r, std::move(t)};
}

//! Per-structure trace aggregate over a query stream.
struct TraceSummary {
    std::string structure;
    std::string workload;
    std::uint64_t n = 0;
    std::uint64_t queries = 0;
    std::uint64_t median_lines = 0;
    std::uint64_t median_pages = 0;
    std::uint64_t median_comparisons = 0;
    std::uint64_t median_steps = 0;
};

inline std::string trace_summary_csv_header() {
    return "structure,workload,n,queries,median_lines,median_pages,"
           "median_comparisons,median_steps";
}

inline std::string to_csv(const TraceSummary& s) {
    return s.structure + "," + s.workload + "," + std::to_string(s.n) + "," +
           std::to_string(s.queries) + "," + std::to_string(s.median_lines) + "," +
           std::to_string(s.median_pages) + "," + std::to_string(s.median_comparisons) + "," +
           std::to_string(s.median_steps);
}

} // namespace nitro
