#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#if defined(__x86_64__)
#include <x86intrin.h>
#endif

#include "nitro/binary_search.hpp"
#include "nitro/bplus.hpp"
#include "nitro/codegen.hpp"
#include "nitro/column.hpp"
#include "nitro/csb.hpp"
#include "nitro/css.hpp"
#include "nitro/fast.hpp"
#include "nitro/kary.hpp"
#include "nitro/nitrogen.hpp"
#include "nitro/trace.hpp"
#include "nitro/util.hpp"
#include "nitro/workload.hpp"

namespace nitro {

enum class Structure : std::uint8_t { binary, bplus, css, csb, kary, fast, ng_binary, ng_css };

inline const char* structure_name(Structure s) {
    switch (s) {
    case Structure::binary: return "binary";
    case Structure::bplus: return "bplus";
    case Structure::css: return "css";
    case Structure::csb: return "csb";
    case Structure::kary: return "kary";
    case Structure::fast: return "fast";
    case Structure::ng_binary: return "ng_binary";
    case Structure::ng_css: return "ng_css";
    }
    return "?";
}

inline Structure structure_from_name(const std::string& name) {
    for (Structure s : {Structure::binary, Structure::bplus, Structure::css, Structure::csb,
                        Structure::kary, Structure::fast, Structure::ng_binary, Structure::ng_css})
        if (name == structure_name(s))
            return s;
    throw std::invalid_argument("unknown structure: " + name);
}

//! One benchmark configuration. Zeroed structure parameters resolve to the
//! structure's defaults; levels = auto_levels lets the instruction budget
//! pick the compiled depth of the ng structures.
struct BenchSpec {
    static constexpr std::size_t auto_levels = static_cast<std::size_t>(-1);

    Structure structure = Structure::binary;
    std::uint64_t n = 1u << 20;
    std::size_t fanout = 0;
    std::size_t leaf_keys = 0;
    std::size_t k = 0;
    std::size_t ds = 2, dc = 2, dp = 2;
    std::size_t levels = auto_levels;
    std::size_t cutoff = 8;
    Workload workload{};
    std::size_t repetitions = 5;
    std::size_t warmup_rounds = 1;
    std::size_t threads = 1;
    std::size_t trace_sample = 4096;
    std::size_t icache_budget = 32768;
    std::string note;
};

//! Fills structure-specific defaults and rejects invalid combinations.
inline BenchSpec resolve_spec(BenchSpec s) {
    if (s.repetitions < 1)
        throw std::invalid_argument("bench spec: repetitions must be at least 1");
    if (s.threads < 1)
        throw std::invalid_argument("bench spec: threads must be at least 1");
    if (s.workload.query_count == 0)
        throw std::invalid_argument("bench spec: query count must be positive");
    switch (s.structure) {
    case Structure::binary:
    case Structure::ng_binary:
        s.fanout = 0;
        s.leaf_keys = 0;
        s.k = 0;
        break;
    case Structure::bplus:
    case Structure::css:
    case Structure::csb:
    case Structure::ng_css:
        if (s.fanout == 0)
            s.fanout = 16;
        if (s.leaf_keys == 0)
            s.leaf_keys = 64;
        if (s.fanout < 2)
            throw std::invalid_argument("bench spec: fanout must be at least 2");
        s.k = 0;
        break;
    case Structure::kary:
        if (s.k == 0)
            s.k = 4;
        s.fanout = 0;
        s.leaf_keys = 0;
        break;
    case Structure::fast:
        if (s.leaf_keys == 0)
            s.leaf_keys = fast_default_leaf_keys;
        if (s.ds < 1 || s.dc < 1 || s.dp < 1)
            throw std::invalid_argument("bench spec: blocking depths must be at least 1");
        s.fanout = 0;
        s.k = 0;
        break;
    }
    if (s.structure != Structure::fast)
        s.ds = s.dc = s.dp = 0;
    if (s.structure != Structure::binary && s.structure != Structure::ng_binary)
        s.cutoff = 0;
    return s;
}

//! Synthetic dataset: keys are the odd numbers 2i+1 (so every even number
//! misses), values are the positions.
inline SortedColumn make_synthetic_column(std::uint64_t n) {
    SortedColumn col;
    col.keys.resize(n);
    col.values.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        col.keys[i] = static_cast<key_type>(2 * i + 1);
        col.values[i] = static_cast<value_type>(i);
    }
    return col;
}

//! All structures behind one dispatch, built once per bench run.
struct BuiltIndex {
    Structure structure = Structure::binary;
    BinarySearchConfig cfg{};
    BPlusTree bplus;
    CssTree css;
    CsbTree csb;
    KaryTree kary;
    FastTree fast;
    NgBinaryIndex ngb;
    NgCssIndex ngc;
    std::size_t levels = 0; // compiled levels (ng) or tree depth
};

inline BuiltIndex build_index(const BenchSpec& spec, const SortedColumn& col) {
    BuiltIndex b;
    b.structure = spec.structure;
    switch (spec.structure) {
    case Structure::binary:
        b.cfg.linear_cutoff = spec.cutoff;
        break;
    case Structure::bplus:
        b.bplus = build_bplus(col, spec.fanout, spec.leaf_keys);
        b.levels = b.bplus.levels.size();
        break;
    case Structure::css:
        b.css = build_css(col, spec.fanout, spec.leaf_keys);
        b.levels = b.css.depth;
        break;
    case Structure::csb:
        b.csb = build_csb(col, spec.fanout, spec.leaf_keys);
        b.levels = b.csb.levels.size();
        break;
    case Structure::kary:
        b.kary = build_kary(col, spec.k);
        b.levels = b.kary.depth;
        break;
    case Structure::fast:
        b.fast = build_fast(col, {spec.ds, spec.dc, spec.dp}, spec.leaf_keys);
        b.levels = b.fast.simd_levels;
        break;
    case Structure::ng_binary: {
        b.cfg.linear_cutoff = spec.cutoff;
        std::size_t levels = spec.levels;
        if (levels == BenchSpec::auto_levels) {
            std::size_t max_levels = 1;
            while ((std::uint64_t{1} << max_levels) < col.size() + 1 && max_levels < 40)
                ++max_levels;
            levels = choose_levels(
                [&](std::size_t l) { return compile_binary(col, l); }, max_levels + 1,
                spec.icache_budget);
        }
        b.ngb = make_ng_binary(col, levels, b.cfg);
        b.levels = levels;
        break;
    }
    case Structure::ng_css: {
        const std::size_t fanout = spec.fanout, leaf_keys = spec.leaf_keys;
        std::size_t levels = spec.levels;
        if (levels == BenchSpec::auto_levels) {
            const CssTree probe = build_css(col, fanout, leaf_keys);
            levels = choose_levels(
                [&](std::size_t l) { return compile_css(probe, col, l); }, probe.depth + 1,
                spec.icache_budget);
        }
        b.ngc = make_ng_css(col, levels, fanout, leaf_keys);
        b.levels = b.ngc.levels;
        break;
    }
    }
    return b;
}

template <typename R>
SearchResult search_built(const BuiltIndex& b, const SortedColumn& col, key_type key, R& rec) {
    switch (b.structure) {
    case Structure::binary: return binary_search(col, key, b.cfg, rec);
    case Structure::bplus: return bplus_search(b.bplus, key, rec);
    case Structure::css: return css_search(b.css, col, key, rec);
    case Structure::csb: return csb_search(b.csb, key, rec);
    case Structure::kary: return kary_search(b.kary, col, key, rec);
    case Structure::fast: return fast_search(b.fast, col, key, rec);
    case Structure::ng_binary: return ng_binary_search(b.ngb, col, key, rec);
    case Structure::ng_css: return ng_css_search(b.ngc, col, key, rec);
    }
    return {false, 0};
}

inline SearchResult search_built(const BuiltIndex& b, const SortedColumn& col, key_type key) {
    NullRecorder rec;
    return search_built(b, col, key, rec);
}

//! One aggregated result row; raw per-repetition samples ride along.
struct BenchRow {
    BenchSpec spec;          // resolved
    std::size_t levels = 0;  // compiled levels (ng) or tree depth
    double build_ms = 0;
    double ns_per_lookup_median = 0;
    double ns_per_lookup_p99 = 0;
    double cycles_per_lookup_median = 0;
    double lookups_per_sec = 0;
    std::uint64_t median_lines = 0;
    std::uint64_t median_pages = 0;
    std::uint64_t median_comparisons = 0;
    std::uint64_t median_steps = 0;
    std::vector<double> raw_ns;
    std::uint64_t checksum = 0;
};

inline std::string bench_csv_header() {
    return "structure,n,fanout,leaf_keys,k,ds,dc,dp,levels,cutoff,workload,zipf_s,"
           "hit_fraction,seed,queries,reps,warmup,threads,build_ms,ns_per_lookup_median,"
           "ns_per_lookup_p99,cycles_per_lookup_median,lookups_per_sec,median_lines,"
           "median_pages,median_comparisons,median_steps,raw_ns_per_lookup,checksum,note";
}

inline std::string to_csv(const BenchRow& r) {
    const BenchSpec& s = r.spec;
    std::string raw;
    for (std::size_t i = 0; i < r.raw_ns.size(); ++i)
        raw += (i ? ";" : "") + std::to_string(r.raw_ns[i]);
    std::string out;
    out += structure_name(s.structure);
    out += "," + std::to_string(s.n);
    out += "," + std::to_string(s.fanout);
    out += "," + std::to_string(s.leaf_keys);
    out += "," + std::to_string(s.k);
    out += "," + std::to_string(s.ds);
    out += "," + std::to_string(s.dc);
    out += "," + std::to_string(s.dp);
    out += "," + std::to_string(r.levels);
    out += "," + std::to_string(s.cutoff);
    out += std::string(",") + (s.workload.distribution == Distribution::zipf ? "zipf" : "uniform");
    out += "," + std::to_string(s.workload.zipf_s);
    out += "," + std::to_string(s.workload.hit_fraction);
    out += "," + std::to_string(s.workload.seed);
    out += "," + std::to_string(s.workload.query_count);
    out += "," + std::to_string(s.repetitions);
    out += "," + std::to_string(s.warmup_rounds);
    out += "," + std::to_string(s.threads);
    out += "," + std::to_string(r.build_ms);
    out += "," + std::to_string(r.ns_per_lookup_median);
    out += "," + std::to_string(r.ns_per_lookup_p99);
    out += "," + std::to_string(r.cycles_per_lookup_median);
    out += "," + std::to_string(r.lookups_per_sec);
    out += "," + std::to_string(r.median_lines);
    out += "," + std::to_string(r.median_pages);
    out += "," + std::to_string(r.median_comparisons);
    out += "," + std::to_string(r.median_steps);
    out += "," + raw;
    out += "," + std::to_string(r.checksum);
    out += "," + s.note;
    return out;
}

namespace detail {

inline std::uint64_t read_cycle_counter() {
#if defined(__x86_64__)
    return __rdtsc();
#else
    return 0;
#endif
}

//! Dependency-chained batch: each result steers the next query index, so
//! lookups cannot overlap and the loop measures latency, not throughput.
inline std::uint64_t chained_batch(const BuiltIndex& b, const SortedColumn& col,
                                   const std::vector<key_type>& queries) {
    NullRecorder rec;
    const std::size_t q = queries.size();
    std::uint64_t checksum = 0;
    std::size_t j = 0;
    for (std::size_t t = 0; t < q; ++t) {
        const SearchResult r = search_built(b, col, queries[j], rec);
        const std::uint64_t v = r.found ? r.value : 0;
        checksum += v + (r.found ? 1 : 0);
        j = ((t + 1) ^ (v & 7)) % q;
    }
    return checksum;
}

} // namespace detail

//! Builds the index, runs warmup rounds, then timed repetitions of the
//! chained batch. Build time is excluded from the lookup timings; the p99
//! is taken across repetition samples; trace medians come from re-running
//! a sample of the stream under the access recorder.
inline BenchRow run_bench(const BenchSpec& raw_spec, const SortedColumn& col) {
    using clock = std::chrono::steady_clock;
    const BenchSpec spec = resolve_spec(raw_spec);
    if (col.size() != spec.n)
        throw std::invalid_argument("bench spec: n does not match the dataset size");

    BenchRow row;
    row.spec = spec;

    const auto b0 = clock::now();
    const BuiltIndex built = build_index(spec, col);
    const auto b1 = clock::now();
    row.build_ms = std::chrono::duration<double, std::milli>(b1 - b0).count();
    row.levels = built.levels;

    const std::vector<key_type> queries = generate_queries(col, spec.workload);

    std::vector<std::vector<key_type>> thread_queries;
    if (spec.threads > 1) {
        for (std::size_t t = 1; t < spec.threads; ++t) {
            Workload w = spec.workload;
            w.seed = spec.workload.seed + t;
            thread_queries.push_back(generate_queries(col, w));
        }
    }

    std::vector<double> ns_samples, cycle_samples;
    std::uint64_t checksum = 0;
    for (std::size_t rep = 0; rep < spec.warmup_rounds + spec.repetitions; ++rep) {
        std::uint64_t rep_checksum = 0;
        const std::uint64_t c0 = detail::read_cycle_counter();
        const auto t0 = clock::now();
        if (spec.threads == 1) {
            rep_checksum = detail::chained_batch(built, col, queries);
        } else {
            std::vector<std::uint64_t> sums(spec.threads, 0);
            std::vector<std::thread> pool;
            for (std::size_t t = 1; t < spec.threads; ++t)
                pool.emplace_back([&, t] {
                    sums[t] = detail::chained_batch(built, col, thread_queries[t - 1]);
                });
            sums[0] = detail::chained_batch(built, col, queries);
            for (std::thread& th : pool)
                th.join();
            for (std::uint64_t s : sums)
                rep_checksum += s;
        }
        const auto t1 = clock::now();
        const std::uint64_t c1 = detail::read_cycle_counter();
        if (rep < spec.warmup_rounds)
            continue;
        const double total = static_cast<double>(queries.size()) *
                             static_cast<double>(spec.threads);
        ns_samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / total);
        cycle_samples.push_back(static_cast<double>(c1 - c0) / total);
        checksum = rep_checksum;
    }
    row.raw_ns = ns_samples;
    row.ns_per_lookup_median = median_of(ns_samples);
    row.ns_per_lookup_p99 = quantile_of(ns_samples, 0.99);
    row.cycles_per_lookup_median = median_of(cycle_samples);
    row.lookups_per_sec =
        row.ns_per_lookup_median > 0 ? 1e9 / row.ns_per_lookup_median * spec.threads : 0;
    row.checksum = checksum;

    const std::size_t sample = std::min(spec.trace_sample, queries.size());
    std::vector<std::uint64_t> lines, pages, cmps, steps;
    for (std::size_t i = 0; i < sample; ++i) {
        AccessTrace rec;
        search_built(built, col, queries[i], rec);
        lines.push_back(rec.distinct_lines());
        pages.push_back(rec.distinct_pages());
        cmps.push_back(rec.comparisons);
        steps.push_back(rec.steps);
    }
    row.median_lines = median_of(lines);
    row.median_pages = median_of(pages);
    row.median_comparisons = median_of(cmps);
    row.median_steps = median_of(steps);
    return row;
}

inline BenchRow run_bench(const BenchSpec& spec) {
    return run_bench(spec, make_synthetic_column(resolve_spec(spec).n));
}

//! Oracle-equivalence sweep over all structures. Every present key must be
//! found with its value and absent keys must miss, matching a linear scan.
struct VerifyReport {
    bool pass = true;
    std::uint64_t checks = 0;
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        ++checks;
        if (!ok) {
            pass = false;
            if (failures.size() < 50)
                failures.push_back(what);
        }
    }
};

namespace detail {

inline SortedColumn random_column(Rng& rng, std::uint64_t n) {
    std::vector<key_type> keys;
    keys.reserve(n);
    while (keys.size() < n) {
        for (std::uint64_t i = keys.size(); i < n; ++i)
            keys.push_back(static_cast<key_type>(rng.below(max_sentinel)));
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    }
    std::vector<std::pair<key_type, value_type>> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < keys.size(); ++i)
        pairs.emplace_back(keys[i], static_cast<value_type>(i * 3 + 1));
    return build_column(pairs);
}

inline void verify_column(VerifyReport& rep, const SortedColumn& col, Rng& rng) {
    std::vector<BenchSpec> specs;
    for (Structure s : {Structure::binary, Structure::bplus, Structure::css, Structure::csb,
                        Structure::kary, Structure::fast, Structure::ng_binary, Structure::ng_css}) {
        BenchSpec spec;
        spec.structure = s;
        spec.n = col.size();
        spec.workload.query_count = 1; // lookups come from the key sets below
        specs.push_back(spec);

        BenchSpec alt = spec;
        switch (s) {
        case Structure::binary:
        case Structure::ng_binary:
            alt.cutoff = 1;
            alt.levels = 2;
            break;
        case Structure::bplus:
        case Structure::css:
        case Structure::csb:
        case Structure::ng_css:
            alt.fanout = 3;
            alt.leaf_keys = 2;
            alt.levels = 1;
            break;
        case Structure::kary:
            alt.k = 3;
            break;
        case Structure::fast:
            alt.ds = 1;
            alt.dc = 3;
            alt.dp = 1;
            alt.leaf_keys = 4;
            break;
        }
        specs.push_back(alt);
    }

    for (const BenchSpec& raw : specs) {
        const BenchSpec spec = resolve_spec(raw);
        const BuiltIndex built = build_index(spec, col);
        const auto describe = [&](key_type key, const SearchResult& want,
                                  const SearchResult& got) {
            return std::string(structure_name(spec.structure)) + " n=" +
                   std::to_string(col.size()) + " f=" + std::to_string(spec.fanout) + " lc=" +
                   std::to_string(spec.leaf_keys) + " k=" + std::to_string(spec.k) + " key=" +
                   std::to_string(key) + " expected " +
                   (want.found ? "value " + std::to_string(want.value) : "miss") + " got " +
                   (got.found ? "value " + std::to_string(got.value) : "miss");
        };
        for (std::size_t i = 0; i < col.size(); ++i) {
            const key_type key = col.keys[i];
            const SearchResult want = oracle_search(col, key);
            const SearchResult got = search_built(built, col, key);
            rep.expect(got.found && got.value == want.value, describe(key, want, got));
        }
        for (std::size_t i = 0; i < 64; ++i) {
            key_type key = static_cast<key_type>(rng.below(max_sentinel));
            while (std::binary_search(col.keys.begin(), col.keys.end(), key))
                key = static_cast<key_type>(rng.below(max_sentinel));
            const SearchResult got = search_built(built, col, key);
            rep.expect(!got.found, describe(key, {false, 0}, got));
        }
    }
}

} // namespace detail

inline VerifyReport verify_all(std::uint64_t seed = 42) {
    VerifyReport rep;
    Rng rng(seed);
    std::vector<std::uint64_t> sizes = {0, 1, 15, 255, 4096};
    for (int i = 0; i < 3; ++i)
        sizes.push_back(2 + rng.below(3000));
    for (const std::uint64_t n : sizes) {
        const SortedColumn col = detail::random_column(rng, n);
        detail::verify_column(rep, col, rng);
    }
    return rep;
}

//! Structures {binary, css, ng_binary, ng_css} x workloads {uniform, zipf}
//! over a sweep of data sizes: the eight lines of the response-time figure.
//! The ng rows carry the reference gains observed on the original hardware
//! in the note column, next to the locally measured gain.
inline std::vector<BenchRow> experiment_fig5_1(
    const std::vector<std::size_t>& sizes_mb = {1, 2, 4, 8, 16, 32},
    std::size_t queries = 100000, std::uint64_t seed = 42, std::size_t icache_budget = 32768) {
    std::vector<BenchRow> rows;
    for (const std::size_t mb : sizes_mb) {
        const std::uint64_t n = static_cast<std::uint64_t>(mb) * (1u << 20) / 8;
        const SortedColumn col = make_synthetic_column(n);
        for (const Distribution dist : {Distribution::uniform, Distribution::zipf}) {
            double base_binary = 0, base_css = 0;
            for (const Structure s : {Structure::binary, Structure::css, Structure::ng_binary,
                                      Structure::ng_css}) {
                BenchSpec spec;
                spec.structure = s;
                spec.n = n;
                spec.workload.distribution = dist;
                spec.workload.zipf_s = 1.0;
                spec.workload.query_count = queries;
                spec.workload.seed = seed;
                spec.icache_budget = icache_budget;
                BenchRow row = run_bench(spec, col);
                if (s == Structure::binary)
                    base_binary = row.ns_per_lookup_median;
                if (s == Structure::css)
                    base_css = row.ns_per_lookup_median;
                if (s == Structure::ng_binary && base_binary > 0)
                    row.spec.note = "gain_vs_binary=" +
                                    std::to_string((base_binary - row.ns_per_lookup_median) /
                                                   base_binary * 100.0) +
                                    "%;reference_gain=up to 33%";
                if (s == Structure::ng_css && base_css > 0)
                    row.spec.note = "gain_vs_css=" +
                                    std::to_string((base_css - row.ns_per_lookup_median) /
                                                   base_css * 100.0) +
                                    "%;reference_gain=6-10%";
                rows.push_back(row);
            }
        }
    }
    return rows;
}

//! Sweep of keys per internal node over {4, 8, 16, 32, 64, 128} at 32 MB of
//! data. The note column carries the reference optima observed on the
//! original hardware; with_ng adds the compiled-tree rows.
inline std::vector<BenchRow> experiment_fig5_2(bool with_ng = false, std::size_t queries = 100000,
                                               std::uint64_t seed = 42,
                                               std::size_t icache_budget = 32768) {
    const std::uint64_t n = 32u * (1u << 20) / 8;
    const SortedColumn col = make_synthetic_column(n);
    std::vector<BenchRow> rows;
    for (const std::size_t keys_per_node : {4, 8, 16, 32, 64, 128}) {
        BenchSpec spec;
        spec.structure = Structure::css;
        spec.n = n;
        spec.fanout = keys_per_node + 1;
        spec.leaf_keys = 64;
        spec.workload.query_count = queries;
        spec.workload.seed = seed;
        spec.note = "keys_per_node=" + std::to_string(keys_per_node) +
                    ";reference_optimum_css=32;reference_optimum_ng_css=16";
        rows.push_back(run_bench(spec, col));
        if (with_ng) {
            spec.structure = Structure::ng_css;
            spec.icache_budget = icache_budget;
            spec.note += ";reference_ng_gain=5%";
            rows.push_back(run_bench(spec, col));
        }
    }
    return rows;
}

} // namespace nitro
