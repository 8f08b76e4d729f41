#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nitro/binary_search.hpp"
#include "nitro/column.hpp"
#include "nitro/css.hpp"
#include "nitro/trace.hpp"

namespace nitro {

//! Instruction set of a compiled decision program. A program compares the
//! query key against literals baked into the instruction stream and
//! branches on the outcome of the most recent comparison; it terminates by
//! reporting found or not found, or by handing off to a residual search.
enum class Op : std::uint8_t {
    cmp,          // compare query key against the literal in arg
    br_lt,        // jump to arg if key < literal of the last cmp
    br_eq,        // jump to arg if key == literal of the last cmp
    br_gt,        // jump to arg if key > literal of the last cmp
    jmp,          // jump to arg
    set_value,    // stage arg as the value reported on ret_found
    ret_found,    // terminate: key present, staged value is the answer
    ret_notfound, // terminate: key absent
    fallback,     // terminate: continue in the residual structure
};

//! Residual search named by a fallback instruction.
enum class FallbackKind : std::uint8_t {
    none,
    sorted_range, // sorted column positions [x, y] inclusive; x > y is empty
    css_node,     // resume tree descent at node x, internal level y
};

//! Report bucket an instruction is attributed to: separator chains of
//! compiled internal nodes, key-value chains of compiled leaves, handoffs,
//! or shared program tails.
enum class Region : std::uint8_t { internal, leaf, fallback, glue };

struct Instr {
    Op op = Op::ret_notfound;
    Region region = Region::glue;
    std::uint32_t arg = 0;  // cmp literal, staged value, or branch target
    FallbackKind fb = FallbackKind::none;
    std::uint64_t x = 0, y = 0;
};

struct Program {
    std::vector<Instr> code;

    std::size_t size() const { return code.size(); }
};

namespace detail {

inline const char* op_name(Op op) {
    switch (op) {
    case Op::cmp: return "cmp";
    case Op::br_lt: return "br_lt";
    case Op::br_eq: return "br_eq";
    case Op::br_gt: return "br_gt";
    case Op::jmp: return "jmp";
    case Op::set_value: return "set_value";
    case Op::ret_found: return "ret_found";
    case Op::ret_notfound: return "ret_notfound";
    case Op::fallback: return "fallback";
    }
    return "?";
}

} // namespace detail

//! Renders one instruction per line as "index: opcode operands".
inline std::string dump(const Program& p) {
    std::string out;
    for (std::size_t i = 0; i < p.code.size(); ++i) {
        const Instr& in = p.code[i];
        out += std::to_string(i);
        out += ": ";
        out += detail::op_name(in.op);
        switch (in.op) {
        case Op::cmp:
        case Op::set_value:
        case Op::br_lt:
        case Op::br_eq:
        case Op::br_gt:
        case Op::jmp:
            out += " " + std::to_string(in.arg);
            break;
        case Op::fallback:
            out += in.fb == FallbackKind::sorted_range ? " sorted_range" : " css_node";
            out += " " + std::to_string(in.x) + " " + std::to_string(in.y);
            break;
        default:
            break;
        }
        out += "\n";
    }
    return out;
}

//! Checks that a program is a well formed loop-free decision program:
//! non-empty, all control targets are strictly forward (which rules out
//! cycles), no instruction falls off the end, branches are dominated by a
//! comparison, ret_found is dominated by set_value, and fallbacks carry a
//! kind. Throws std::invalid_argument describing the first violation.
inline void validate(const Program& p) {
    const std::size_t n = p.code.size();
    if (n == 0)
        throw std::invalid_argument("program: empty");

    const auto fail = [](std::size_t i, const std::string& what) {
        throw std::invalid_argument("program: instruction " + std::to_string(i) + ": " + what);
    };

    // reach[i] is a bitset over (has_value, has_flag) states seen at entry
    // of i; state bits: 1 = value staged, 2 = flag defined.
    std::vector<std::uint8_t> reach(n, 0);
    const auto mark = [&](std::size_t target, std::uint8_t states) {
        reach[target] = static_cast<std::uint8_t>(reach[target] | states);
    };
    mark(0, 1u << 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!reach[i])
            continue;
        const Instr& in = p.code[i];
        const std::uint8_t states = reach[i];
        const bool falls_through =
            in.op == Op::cmp || in.op == Op::set_value || in.op == Op::br_lt ||
            in.op == Op::br_eq || in.op == Op::br_gt;
        const bool has_target =
            in.op == Op::jmp || in.op == Op::br_lt || in.op == Op::br_eq || in.op == Op::br_gt;

        if (falls_through && i + 1 >= n)
            fail(i, "falls off the end of the program");
        if (has_target) {
            if (in.arg <= i)
                fail(i, "control target must be strictly forward");
            if (in.arg >= n)
                fail(i, "control target out of range");
        }

        std::uint8_t out = states;
        switch (in.op) {
        case Op::cmp:
            out = 0;
            for (int s = 0; s < 4; ++s)
                if (states & (1u << s))
                    out |= 1u << (s | 2);
            mark(i + 1, out);
            break;
        case Op::set_value:
            out = 0;
            for (int s = 0; s < 4; ++s)
                if (states & (1u << s))
                    out |= 1u << (s | 1);
            mark(i + 1, out);
            break;
        case Op::br_lt:
        case Op::br_eq:
        case Op::br_gt:
            for (int s = 0; s < 4; ++s)
                if ((states & (1u << s)) && !(s & 2))
                    fail(i, "branch with undefined comparison flag");
            mark(i + 1, states);
            mark(in.arg, states);
            break;
        case Op::jmp:
            mark(in.arg, states);
            break;
        case Op::ret_found:
            for (int s = 0; s < 4; ++s)
                if ((states & (1u << s)) && !(s & 1))
                    fail(i, "ret_found with no staged value");
            break;
        case Op::ret_notfound:
            break;
        case Op::fallback:
            if (in.fb == FallbackKind::none)
                fail(i, "fallback without a kind");
            break;
        }
    }
}

//! Outcome of running a decision program: a decided result, or the
//! residual search the program handed off to.
struct InterpOutcome {
    bool fell_back = false;
    SearchResult result{false, 0};
    FallbackKind fb = FallbackKind::none;
    std::uint64_t fb_x = 0, fb_y = 0;
};

//! Reference semantics of a program. Comparisons are counted through the
//! recorder; instruction literals are code, not data, so no array probes
//! are recorded. The fuel bound turns any cycle smuggled past validation
//! into an exception instead of an endless loop.
template <typename R>
InterpOutcome interpret(const Program& p, key_type key, R& rec) {
    if (p.code.empty())
        throw std::invalid_argument("interpret: empty program");
    std::size_t idx = 0;
    value_type value = 0;
    int flag = 0;
    for (std::uint64_t fuel = p.code.size() + 1; fuel > 0; --fuel) {
        const Instr& in = p.code[idx];
        rec.step();
        switch (in.op) {
        case Op::cmp:
            rec.compare();
            flag = key < in.arg ? -1 : key == in.arg ? 0 : 1;
            ++idx;
            break;
        case Op::set_value:
            value = in.arg;
            ++idx;
            break;
        case Op::br_lt:
            idx = flag < 0 ? in.arg : idx + 1;
            break;
        case Op::br_eq:
            idx = flag == 0 ? in.arg : idx + 1;
            break;
        case Op::br_gt:
            idx = flag > 0 ? in.arg : idx + 1;
            break;
        case Op::jmp:
            idx = in.arg;
            break;
        case Op::ret_found:
            return {false, {true, value}, FallbackKind::none, 0, 0};
        case Op::ret_notfound:
            return {false, {false, 0}, FallbackKind::none, 0, 0};
        case Op::fallback:
            return {true, {false, 0}, in.fb, in.x, in.y};
        }
    }
    throw std::runtime_error("interpret: instruction budget exhausted, program loops");
}

//! Sorted multiset of all comparison literals in a program; compiling a
//! structure must reproduce exactly the keys that structure would compare
//! against.
inline std::vector<key_type> cmp_literals(const Program& p) {
    std::vector<key_type> lits;
    for (const Instr& in : p.code)
        if (in.op == Op::cmp)
            lits.push_back(in.arg);
    std::sort(lits.begin(), lits.end());
    return lits;
}

namespace detail {

//! Shared found / not-found tails, appended on first use so programs whose
//! paths all end in fallbacks stay tail-free.
struct TailPatcher {
    std::vector<std::size_t> to_found, to_notfound;

    void finish(Program& p) {
        if (!to_found.empty()) {
            const auto f = static_cast<std::uint32_t>(p.code.size());
            p.code.push_back({Op::ret_found, Region::glue, 0, FallbackKind::none, 0, 0});
            for (std::size_t i : to_found)
                p.code[i].arg = f;
        }
        if (!to_notfound.empty()) {
            const auto nf = static_cast<std::uint32_t>(p.code.size());
            p.code.push_back({Op::ret_notfound, Region::glue, 0, FallbackKind::none, 0, 0});
            for (std::size_t i : to_notfound)
                p.code[i].arg = nf;
        }
    }
};

inline void emit_pair(Program& p, TailPatcher& tails, key_type k, value_type v, bool last) {
    p.code.push_back({Op::set_value, Region::leaf, v, FallbackKind::none, 0, 0});
    p.code.push_back({Op::cmp, Region::leaf, k, FallbackKind::none, 0, 0});
    tails.to_found.push_back(p.code.size());
    p.code.push_back({Op::br_eq, Region::leaf, 0, FallbackKind::none, 0, 0});
    tails.to_notfound.push_back(p.code.size());
    p.code.push_back({last ? Op::jmp : Op::br_lt, Region::leaf, 0, FallbackKind::none, 0, 0});
}

} // namespace detail

//! Compiles the first `levels` iterations of the binary range search into a
//! decision program. Each compiled level compares against the middle key
//! and branches: key greater continues in the upper half, everything else
//! falls through into the lower half, exactly the narrowing rule of the
//! range search. Uncompiled subranges become sorted_range fallbacks; a
//! range narrowed to one key is compiled as a terminal key-value check.
inline Program compile_binary(const SortedColumn& col, std::size_t levels) {
    Program p;
    detail::TailPatcher tails;
    if (col.size() == 0 || levels == 0) {
        if (col.size() == 0)
            p.code.push_back({Op::fallback, Region::fallback, 0, FallbackKind::sorted_range, 1, 0});
        else
            p.code.push_back({Op::fallback, Region::fallback, 0, FallbackKind::sorted_range, 0,
                              col.size() - 1});
        return p;
    }

    // NOLINTNEXTLINE(misc-no-recursion)
    const auto emit = [&](auto&& self, std::uint64_t lo, std::uint64_t hi,
                          std::size_t level) -> void {
        if (lo == hi) {
            detail::emit_pair(p, tails, col.keys[lo], col.values[lo], true);
            return;
        }
        if (level == levels) {
            p.code.push_back({Op::fallback, Region::fallback, 0, FallbackKind::sorted_range, lo, hi});
            return;
        }
        const std::uint64_t mid = (lo + hi) / 2;
        p.code.push_back({Op::cmp, Region::internal, col.keys[mid], FallbackKind::none, 0, 0});
        const std::size_t br = p.code.size();
        p.code.push_back({Op::br_gt, Region::internal, 0, FallbackKind::none, 0, 0});
        self(self, lo, mid, level + 1);
        p.code[br].arg = static_cast<std::uint32_t>(p.code.size());
        self(self, mid + 1, hi, level + 1);
    };
    emit(emit, 0, col.size() - 1, 0);
    tails.finish(p);
    validate(p);
    return p;
}

//! Compiles the top `levels` tree levels into a decision program; `levels`
//! may be depth + 1 to compile the leaf blocks too, leaving no fallbacks.
//! A compiled internal node is a chain over its real separators: key below
//! the separator descends, key equal descends into the leftmost child with
//! that separator (matching the strictly-less partition kernel), key above
//! falls through along the chain. Children beyond the last real separator
//! are unreachable for real queries and are pruned. Compiled leaves become
//! key-value chains sharing one found / not-found tail.
inline Program compile_css(const CssTree& t, const SortedColumn& col, std::size_t levels) {
    if (levels > t.depth + 1)
        throw std::invalid_argument("compile_css: levels exceeds depth + 1");
    Program p;
    detail::TailPatcher tails;

    // NOLINTNEXTLINE(misc-no-recursion)
    const auto emit = [&](auto&& self, std::uint64_t node, std::size_t level) -> void {
        if (level == levels) {
            p.code.push_back(
                {Op::fallback, Region::fallback, 0, FallbackKind::css_node, node, level});
            return;
        }
        if (level == t.depth) {
            const std::uint64_t start = (node - t.node_count) * t.leaf_keys;
            const std::uint64_t cnt =
                start >= col.size()
                    ? 0
                    : std::min<std::uint64_t>(t.leaf_keys, col.size() - start);
            if (cnt == 0) {
                p.code.push_back({Op::ret_notfound, Region::leaf, 0, FallbackKind::none, 0, 0});
                return;
            }
            for (std::uint64_t i = 0; i < cnt; ++i)
                detail::emit_pair(p, tails, col.keys[start + i], col.values[start + i],
                                  i + 1 == cnt);
            return;
        }

        const std::size_t f = t.fanout;
        std::size_t real = 0;
        while (real + 1 < f && t.separator(node, real) != max_sentinel)
            ++real;
        // branch placeholders per child; child r is the fallthrough of the chain
        std::vector<std::vector<std::size_t>> patch(real + 1);
        for (std::size_t j = 0; j < real; ++j) {
            const key_type sep = t.separator(node, j);
            std::size_t eq = j;
            while (eq > 0 && t.separator(node, eq - 1) == sep)
                --eq;
            p.code.push_back({Op::cmp, Region::internal, sep, FallbackKind::none, 0, 0});
            patch[j].push_back(p.code.size());
            p.code.push_back({Op::br_lt, Region::internal, 0, FallbackKind::none, 0, 0});
            patch[eq].push_back(p.code.size());
            p.code.push_back({Op::br_eq, Region::internal, 0, FallbackKind::none, 0, 0});
        }
        patch[real].push_back(p.code.size());
        p.code.push_back({Op::jmp, Region::internal, 0, FallbackKind::none, 0, 0});
        for (std::size_t c = 0; c <= real; ++c) {
            const auto entry = static_cast<std::uint32_t>(p.code.size());
            for (std::size_t i : patch[c])
                p.code[i].arg = entry;
            self(self, node * f + c + 1, level + 1);
        }
    };
    emit(emit, 0, 0);
    tails.finish(p);
    validate(p);
    return p;
}

//! Decision program compiled from the top of a binary search, with the
//! residual range search it falls back into.
struct NgBinaryIndex {
    Program prog;
    BinarySearchConfig cfg{};
    std::size_t levels = 0;
};

inline NgBinaryIndex make_ng_binary(const SortedColumn& col, std::size_t levels,
                                    BinarySearchConfig cfg = {}) {
    return {compile_binary(col, levels), cfg, levels};
}

template <typename R>
SearchResult ng_binary_search(const NgBinaryIndex& idx, const SortedColumn& col, key_type key,
                              R& rec) {
    const InterpOutcome o = interpret(idx.prog, key, rec);
    if (!o.fell_back)
        return o.result;
    if (o.fb_x > o.fb_y)
        return {false, 0};
    return binary_search_range(col, static_cast<std::size_t>(o.fb_x),
                               static_cast<std::size_t>(o.fb_y), key, idx.cfg, rec);
}

inline SearchResult ng_binary_search(const NgBinaryIndex& idx, const SortedColumn& col,
                                     key_type key) {
    NullRecorder rec;
    return ng_binary_search(idx, col, key, rec);
}

//! Decision program compiled from the top of a tree, with the residual
//! tree it resumes in.
struct NgCssIndex {
    Program prog;
    CssTree tree;
    std::size_t levels = 0;
};

inline NgCssIndex make_ng_css(const SortedColumn& col, std::size_t levels,
                              std::size_t fanout = 16, std::size_t leaf_keys = 64) {
    NgCssIndex idx;
    idx.tree = build_css(col, fanout, leaf_keys);
    if (levels > idx.tree.depth + 1)
        levels = idx.tree.depth + 1;
    idx.prog = compile_css(idx.tree, col, levels);
    idx.levels = levels;
    return idx;
}

template <typename R>
SearchResult ng_css_search(const NgCssIndex& idx, const SortedColumn& col, key_type key,
                           R& rec) {
    const InterpOutcome o = interpret(idx.prog, key, rec);
    if (!o.fell_back)
        return o.result;
    return css_search_from(idx.tree, col, key, o.fb_x, static_cast<std::size_t>(o.fb_y), rec);
}

inline SearchResult ng_css_search(const NgCssIndex& idx, const SortedColumn& col, key_type key) {
    NullRecorder rec;
    return ng_css_search(idx, col, key, rec);
}

} // namespace nitro
