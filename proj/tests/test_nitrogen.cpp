#include <algorithm>

#include <catch2/catch_amalgamated.hpp>

#include "nitro/nitrogen.hpp"
#include "nitro/workload.hpp"

using namespace nitro;

namespace {

SortedColumn tens_column(std::size_t n) {
    std::vector<std::pair<key_type, value_type>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        pairs.emplace_back(static_cast<key_type>(10 * (i + 1)), static_cast<value_type>(i));
    return build_column(pairs);
}

Instr ins(Op op, std::uint32_t arg = 0) {
    return {op, Region::glue, arg, FallbackKind::none, 0, 0};
}

} // namespace

TEST_CASE("one compiled level of a seven key column is a four instruction program") {
    const SortedColumn col = tens_column(7);
    const Program p = compile_binary(col, 1);

    REQUIRE(p.size() == 4);
    REQUIRE(p.code[0].op == Op::cmp);
    REQUIRE(p.code[0].arg == 40);
    REQUIRE(p.code[0].region == Region::internal);
    REQUIRE(p.code[1].op == Op::br_gt);
    REQUIRE(p.code[1].arg == 3);
    REQUIRE(p.code[2].op == Op::fallback);
    REQUIRE(p.code[2].fb == FallbackKind::sorted_range);
    REQUIRE(p.code[2].x == 0);
    REQUIRE(p.code[2].y == 3);
    REQUIRE(p.code[2].region == Region::fallback);
    REQUIRE(p.code[3].op == Op::fallback);
    REQUIRE(p.code[3].x == 4);
    REQUIRE(p.code[3].y == 6);

    REQUIRE(dump(p) == "0: cmp 40\n"
                       "1: br_gt 3\n"
                       "2: fallback sorted_range 0 3\n"
                       "3: fallback sorted_range 4 6\n");
}

TEST_CASE("validate rejects malformed programs") {
    const auto reject = [](std::vector<Instr> code) {
        Program p;
        p.code = std::move(code);
        REQUIRE_THROWS_AS(validate(p), std::invalid_argument);
    };

    reject({});
    reject({ins(Op::cmp, 5), ins(Op::jmp, 0)});
    reject({ins(Op::cmp, 5), ins(Op::br_gt, 9), ins(Op::ret_notfound)});
    reject({ins(Op::cmp, 5)});
    reject({ins(Op::br_lt, 1), ins(Op::ret_notfound)});
    reject({ins(Op::ret_found)});
    reject({{Op::fallback, Region::fallback, 0, FallbackKind::none, 0, 0}});

    Program ok;
    ok.code = {ins(Op::set_value, 9), ins(Op::cmp, 5), ins(Op::br_eq, 4),
               ins(Op::ret_notfound), ins(Op::ret_found)};
    REQUIRE_NOTHROW(validate(ok));
}

TEST_CASE("the interpreter routes equality left and counts its work") {
    const SortedColumn col = tens_column(7);
    const Program p = compile_binary(col, 1);

    StepCounter low;
    const InterpOutcome a = interpret(p, 10, low);
    REQUIRE(a.fell_back);
    REQUIRE(a.fb == FallbackKind::sorted_range);
    REQUIRE(a.fb_x == 0);
    REQUIRE(a.fb_y == 3);
    REQUIRE(low.comparisons == 1);
    REQUIRE(low.steps == 3);

    StepCounter eq;
    const InterpOutcome b = interpret(p, 40, eq);
    REQUIRE(b.fb_x == 0);
    REQUIRE(b.fb_y == 3);

    StepCounter high;
    const InterpOutcome c = interpret(p, 50, high);
    REQUIRE(c.fb_x == 4);
    REQUIRE(c.fb_y == 6);
    REQUIRE(high.comparisons == 1);
    REQUIRE(high.steps == 3);
}

TEST_CASE("a staged value survives to ret_found") {
    Program p;
    p.code = {ins(Op::set_value, 77), ins(Op::cmp, 5), ins(Op::br_eq, 4),
              ins(Op::ret_notfound), ins(Op::ret_found)};
    NullRecorder rec;
    const InterpOutcome hit = interpret(p, 5, rec);
    REQUIRE_FALSE(hit.fell_back);
    REQUIRE(hit.result == SearchResult{true, 77});
    const InterpOutcome miss = interpret(p, 6, rec);
    REQUIRE(miss.result == SearchResult{false, 0});
}

TEST_CASE("the instruction budget turns smuggled cycles into an exception") {
    Program p;
    p.code = {ins(Op::jmp, 0)};
    NullRecorder rec;
    REQUIRE_THROWS_AS(interpret(p, 1, rec), std::runtime_error);
}

TEST_CASE("a fully compiled tree compares exactly its separators and keys") {
    std::vector<std::pair<key_type, value_type>> pairs;
    for (std::size_t i = 0; i < 64; ++i)
        pairs.emplace_back(static_cast<key_type>(3 * i + 2), static_cast<value_type>(i));
    const SortedColumn col = build_column(pairs);
    const CssTree t = build_css(col, 4, 4);
    REQUIRE(t.depth == 2);
    REQUIRE(t.node_count == 5);

    const Program p = compile_css(t, col, t.depth + 1);
    for (const Instr& in : p.code)
        REQUIRE(in.op != Op::fallback);

    std::vector<key_type> want;
    for (std::size_t i = 0; i < t.node_count; ++i)
        for (std::size_t j = 0; j + 1 < t.fanout; ++j)
            want.push_back(t.separator(i, j));
    want.insert(want.end(), col.keys.begin(), col.keys.end());
    std::sort(want.begin(), want.end());
    REQUIRE(cmp_literals(p) == want);
}

TEST_CASE("compiled programs preserve the search they were compiled from") {
    Rng rng(46211);
    for (std::size_t n : {std::size_t(0), std::size_t(1), std::size_t(2), std::size_t(100),
                          std::size_t(1000)}) {
        CAPTURE(n);
        std::vector<std::pair<key_type, value_type>> pairs;
        for (std::size_t i = 0; i < n; ++i)
            pairs.emplace_back(static_cast<key_type>(rng.below(3 * n + 1)),
                               static_cast<value_type>(i));
        const SortedColumn col = build_column(pairs);

        for (std::size_t levels : {std::size_t(0), std::size_t(1), std::size_t(2),
                                   std::size_t(40)}) {
            CAPTURE(levels);
            const NgBinaryIndex nb = make_ng_binary(col, levels);
            const NgCssIndex nc = make_ng_css(col, levels, 5, 4);

            for (std::size_t i = 0; i < col.size(); ++i) {
                const key_type k = col.keys[i];
                REQUIRE(ng_binary_search(nb, col, k) == binary_search(col, k));
                REQUIRE(ng_css_search(nc, col, k) == css_search(nc.tree, col, k));
            }
            for (int r = 0; r < 150; ++r) {
                const key_type q = static_cast<key_type>(rng.below(4 * n + 10));
                const SearchResult want = oracle_search(col, q);
                REQUIRE(ng_binary_search(nb, col, q) == want);
                REQUIRE(ng_css_search(nc, col, q) == want);
            }
        }
    }
}

TEST_CASE("program size grows with compiled levels until saturation") {
    const SortedColumn col = tens_column(1000);
    std::size_t last = 0;
    for (std::size_t levels = 0; levels <= 6; ++levels) {
        const std::size_t sz = compile_binary(col, levels).size();
        REQUIRE(sz > last);
        last = sz;
    }
    REQUIRE(compile_binary(col, 40).size() == compile_binary(col, 41).size());
}

TEST_CASE("compile_css bounds its level count by the tree depth") {
    const SortedColumn col = tens_column(100);
    const CssTree t = build_css(col, 4, 4);
    REQUIRE_THROWS_AS(compile_css(t, col, t.depth + 2), std::invalid_argument);

    const NgCssIndex clamped = make_ng_css(col, 99, 4, 4);
    REQUIRE(clamped.levels == clamped.tree.depth + 1);
    for (const Instr& in : clamped.prog.code)
        REQUIRE(in.op != Op::fallback);
}

TEST_CASE("empty columns compile to trivial programs") {
    const SortedColumn col;

    const Program pb = compile_binary(col, 3);
    REQUIRE(pb.size() == 1);
    REQUIRE(pb.code[0].op == Op::fallback);
    REQUIRE(pb.code[0].x == 1);
    REQUIRE(pb.code[0].y == 0);
    const NgBinaryIndex nb = make_ng_binary(col, 3);
    REQUIRE_FALSE(ng_binary_search(nb, col, 7).found);

    const NgCssIndex nc = make_ng_css(col, 1, 4, 4);
    REQUIRE(nc.prog.size() == 1);
    REQUIRE(nc.prog.code[0].op == Op::ret_notfound);
    REQUIRE_FALSE(ng_css_search(nc, col, 7).found);
}

TEST_CASE("duplicate separators descend into the leftmost matching child") {
    std::vector<std::pair<key_type, value_type>> pairs;
    for (std::size_t i = 0; i < 16; ++i)
        pairs.emplace_back(5, static_cast<value_type>(i));
    pairs.emplace_back(3, 100);
    pairs.emplace_back(7, 101);
    const SortedColumn col = build_column(pairs);
    const CssTree t = build_css(col, 3, 2);
    REQUIRE(t.depth == 2);

    for (std::size_t levels : {std::size_t(1), std::size_t(2), std::size_t(3)}) {
        CAPTURE(levels);
        const Program p = compile_css(t, col, levels);
        NullRecorder rec;
        for (key_type q = 0; q <= 10; ++q) {
            NgCssIndex idx;
            idx.prog = p;
            idx.tree = t;
            idx.levels = levels;
            const SearchResult got = ng_css_search(idx, col, q, rec);
            const SearchResult want = oracle_search(col, q);
            REQUIRE(got.found == want.found);
            if (q == 3 || q == 7)
                REQUIRE(got == want);
            if (q == 5) {
                bool belongs = false;
                for (std::size_t i = 0; i < col.size(); ++i)
                    if (col.keys[i] == 5 && col.values[i] == got.value)
                        belongs = true;
                REQUIRE(belongs);
            }
        }
    }
}
