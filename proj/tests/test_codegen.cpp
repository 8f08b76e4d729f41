#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#if defined(__unix__)
#include <dlfcn.h>
#endif

#include <catch2/catch_amalgamated.hpp>

#include "nitro/codegen.hpp"
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

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t c = 0;
    for (std::size_t at = hay.find(needle); at != std::string::npos;
         at = hay.find(needle, at + needle.size()))
        ++c;
    return c;
}

} // namespace

TEST_CASE("a single key-value pair compiles to twelve body bytes") {
    const SortedColumn col = tens_column(1);
    const Program p = compile_binary(col, 1);
    const EmitResult r = emit_native(p);

    REQUIRE(r.body_bytes == 12);
    REQUIRE(r.total_bytes == 39);
    REQUIRE(r.leaf_pairs == 1);
    REQUIRE(r.internal_keys == 0);
    REQUIRE(r.fallbacks == 0);
    REQUIRE(contains(r.text, "mov ecx, 0"));
    REQUIRE(contains(r.text, "cmp eax, 10"));
}

TEST_CASE("a fallback-only program is one five byte jump") {
    const SortedColumn col = tens_column(100);
    const Program p = compile_binary(col, 0);
    const EmitResult r = emit_native(p);
    REQUIRE(r.body_bytes == 5);
    REQUIRE(r.fallbacks == 1);
    REQUIRE(contains(r.text, "jmp nitro_search_fb_0"));
}

TEST_CASE("one compiled level emits a compare, a branch and two handoffs") {
    const SortedColumn col = tens_column(7);
    const EmitResult r = emit_native(compile_binary(col, 1));

    REQUIRE(r.body_bytes == 17);
    REQUIRE(r.internal_keys == 1);
    REQUIRE(r.fallbacks == 2);
    REQUIRE(contains(r.text, "cmp eax, 40"));
    REQUIRE(contains(r.text, "ja .L3"));
    REQUIRE(contains(r.text, ".L3:"));
    REQUIRE(contains(r.text, "jmp nitro_search_fb_2"));
    REQUIRE(contains(r.text, "jmp nitro_search_fb_3"));
}

TEST_CASE("the wrapper preamble costs twenty-seven bytes and keeps body flags") {
    const SortedColumn col = tens_column(7);
    const Program p = compile_binary(col, 1);

    const EmitResult with = emit_native(p);
    EmitOptions bare_opt;
    bare_opt.preamble = false;
    const EmitResult without = emit_native(p, bare_opt);
    REQUIRE(with.total_bytes == with.body_bytes + 27);
    REQUIRE(without.total_bytes == without.body_bytes);

    for (const std::string& line :
         {std::string("push rbp"), std::string("mov rbp, rsp"), std::string("mov eax, edi"),
          std::string("call .Lsearch"), std::string("mov eax, 0"), std::string("jne .Lout"),
          std::string("mov eax, 1"), std::string("mov [rsi], ecx"), std::string("leave")}) {
        REQUIRE(contains(with.text, line));
        REQUIRE_FALSE(contains(without.text, line));
    }
    REQUIRE(contains(with.text, ".globl nitro_search"));
    REQUIRE(contains(with.text, ".intel_syntax noprefix"));
}

TEST_CASE("leaf pairs whose branches match the flags collapse to a ret") {
    const SortedColumn col = tens_column(2);
    EmitOptions opt;
    opt.preamble = false;
    const EmitResult r = emit_native(compile_binary(col, 1), opt);
    REQUIRE(r.leaf_pairs == 2);
    REQUIRE(r.body_bytes == 30);
    REQUIRE(r.region_bytes[static_cast<std::size_t>(Region::internal)] == 7);
    REQUIRE(r.region_bytes[static_cast<std::size_t>(Region::leaf)] == 22);
    REQUIRE(r.region_bytes[static_cast<std::size_t>(Region::glue)] == 1);
    REQUIRE(contains(r.text, "ja .L6"));
    REQUIRE_FALSE(contains(r.text, "jbe"));
    REQUIRE(contains(r.text, "cmp eax, 10\n\tret"));
    REQUIRE(count_of(r.text, "\tret\n") == 3);
}

TEST_CASE("compiled separator chains fuse below-or-equal branches") {
    std::vector<std::pair<key_type, value_type>> pairs;
    for (std::size_t i = 0; i < 64; ++i)
        pairs.emplace_back(static_cast<key_type>(3 * i + 2), static_cast<value_type>(i));
    const SortedColumn col = build_column(pairs);
    const CssTree t = build_css(col, 4, 4);
    const Program p = compile_css(t, col, 1);

    const EmitResult r = emit_native(p);
    REQUIRE(r.internal_keys == 3);
    REQUIRE(r.fallbacks == 4);
    REQUIRE(r.body_bytes == 43);
    REQUIRE(count_of(r.text, "jbe") == 3);
    REQUIRE(count_of(r.text, "jmp .L") == 1);
    REQUIRE(r.region_bytes[static_cast<std::size_t>(Region::internal)] == 23);
    REQUIRE(r.region_bytes[static_cast<std::size_t>(Region::fallback)] == 20);
}

TEST_CASE("returns whose flags are ambiguous get an explicit fixup") {
    Program p;
    p.code = {ins(Op::set_value, 3), ins(Op::cmp, 7), ins(Op::br_lt, 4), ins(Op::ret_notfound),
              ins(Op::ret_found)};
    const EmitResult r = emit_native(p);
    REQUIRE(r.body_bytes == 18);
    REQUIRE(contains(r.text, "or al, 1"));
    REQUIRE(contains(r.text, "cmp eax, eax"));
}

TEST_CASE("branches too long for a short encoding are widened") {
    const auto chain = [](std::size_t movs) {
        Program p;
        p.code.push_back(ins(Op::cmp, 5));
        p.code.push_back(ins(Op::br_gt, static_cast<std::uint32_t>(movs + 3)));
        for (std::size_t i = 0; i < movs; ++i)
            p.code.push_back(ins(Op::set_value, static_cast<std::uint32_t>(i)));
        p.code.push_back(ins(Op::ret_found));
        p.code.push_back(ins(Op::ret_notfound));
        return p;
    };

    const EmitResult near = emit_native(chain(20));
    REQUIRE(near.body_bytes == 111);

    const EmitResult far = emit_native(chain(40));
    REQUIRE(far.body_bytes == 215);
}

TEST_CASE("emit_native validates its input") {
    Program empty;
    REQUIRE_THROWS_AS(emit_native(empty), std::invalid_argument);
}

TEST_CASE("the size estimate equals the rendered size") {
    const SortedColumn col = tens_column(321);
    for (std::size_t levels : {std::size_t(0), std::size_t(2), std::size_t(12)}) {
        const Program p = compile_binary(col, levels);
        REQUIRE(native_size_estimate(p) == emit_native(p).total_bytes);
    }
}

TEST_CASE("choose_levels picks the deepest program under the budget") {
    const SortedColumn col = tens_column(1000);
    const auto compile = [&](std::size_t l) { return compile_binary(col, l); };

    REQUIRE(choose_levels(compile, 40, 10) == 0);
    REQUIRE(choose_levels(compile, 40, 39) == 0);
    REQUIRE(choose_levels(compile, 40, 44) == 1);
    REQUIRE(choose_levels(compile, 40, 1u << 30) == 11);

    for (std::size_t budget : {std::size_t(500), std::size_t(4096), std::size_t(32768)}) {
        const std::size_t best = choose_levels(compile, 40, budget);
        REQUIRE(native_size_estimate(compile(best)) <= budget);
        if (native_size_estimate(compile(best + 1)) != native_size_estimate(compile(best)))
            REQUIRE(native_size_estimate(compile(best + 1)) > budget);
    }
}

TEST_CASE("the size report lists one row per region plus a total") {
    const SortedColumn col = tens_column(1);
    const EmitResult r = emit_native(compile_binary(col, 1));
    const std::string csv = size_report_csv(r);

    REQUIRE(contains(csv, "region,bytes,keys,bytes_per_key\n"));
    REQUIRE(contains(csv, "internal,0,0,"));
    REQUIRE(contains(csv, "leaf,11,1,11"));
    REQUIRE(contains(csv, "fallback,0,0,"));
    REQUIRE(contains(csv, "glue,28,0,"));
    REQUIRE(contains(csv, "total,39,1,"));
    REQUIRE(count_of(csv, "\n") == 6);
}

#if defined(__unix__)
TEST_CASE("the emitted assembly runs and agrees with the oracle") {
    const SortedColumn col = tens_column(200);
    const Program p = compile_binary(col, 40);
    EmitOptions opt;
    opt.symbol = "ng_column_search";
    const EmitResult r = emit_native(p, opt);
    REQUIRE(r.fallbacks == 0);

    const std::string asm_path = "ng_emit_test.s";
    const std::string so_path = "./libng_emit_test.so";
    {
        std::ofstream os(asm_path);
        os << r.text;
    }
    const std::string cmd = "cc -x assembler -shared -o " + so_path + " " + asm_path +
                            " 2> ng_emit_test.log";
    if (std::system(cmd.c_str()) != 0) {
        WARN("assembler unavailable, skipping the native execution check");
        return;
    }

    void* lib = dlopen(so_path.c_str(), RTLD_NOW);
    REQUIRE(lib != nullptr);
    using SearchFn = int (*)(unsigned, unsigned*);
    auto fn = reinterpret_cast<SearchFn>(dlsym(lib, "ng_column_search"));
    REQUIRE(fn != nullptr);

    for (key_type q = 0; q <= 2015; ++q) {
        const SearchResult want = oracle_search(col, q);
        unsigned out = 0xdeadbeef;
        const int hit = fn(q, &out);
        REQUIRE(hit == (want.found ? 1 : 0));
        if (want.found)
            REQUIRE(out == want.value);
    }
    dlclose(lib);
    std::remove(asm_path.c_str());
    std::remove(so_path.c_str());
    std::remove("ng_emit_test.log");
}
#endif
