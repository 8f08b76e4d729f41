#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nitro/nitrogen.hpp"

namespace nitro {

//! x86-64 rendering of a decision program, sized instruction by
//! instruction. The calling convention mirrors the interpreter: the search
//! body is entered by call with the key in eax, moves candidate values
//! into ecx unconditionally, and returns with the flags of the last key
//! comparison deciding found (ZF set) or not found. The wrapping function
//! is int(unsigned key, unsigned* value_out), returning 0 or 1.
struct EmitOptions {
    std::string symbol = "nitro_search";
    bool preamble = true; // emit the callable wrapper around the body
    bool text = true;     // render assembler text, not just the size model
};

struct EmitResult {
    std::string text;
    std::size_t body_bytes = 0;
    std::size_t total_bytes = 0;
    std::array<std::size_t, 4> region_bytes{}; // indexed by Region
    std::size_t internal_keys = 0;
    std::size_t leaf_pairs = 0;
    std::size_t fallbacks = 0;
};

namespace detail {

// relation masks for the flag dataflow
inline constexpr std::uint8_t rel_lt = 1, rel_eq = 2, rel_gt = 4, rel_any = 7;

struct NativeItem {
    enum class Kind : std::uint8_t {
        cmp_key,   // cmp eax, imm32              5 bytes
        mov_value, // mov ecx, imm32              5 bytes
        jcc,       // j<cc> rel                   2 or 6 bytes
        jmp,       // jmp rel                     2 or 5 bytes
        jmp_ext,   // jmp to the fallback symbol  5 bytes
        ret,       //                             1 byte
        force_ne,  // or al, 1                    2 bytes
        force_eq,  // cmp eax, eax                2 bytes
    };
    Kind kind;
    Region region;
    std::uint32_t imm = 0;
    std::size_t target = 0; // IR index for jcc / jmp
    const char* cc = "";
    bool wide = false;

    std::size_t bytes() const {
        switch (kind) {
        case Kind::cmp_key:
        case Kind::mov_value:
        case Kind::jmp_ext: return 5;
        case Kind::jcc: return wide ? 6 : 2;
        case Kind::jmp: return wide ? 5 : 2;
        case Kind::ret: return 1;
        case Kind::force_ne:
        case Kind::force_eq: return 2;
        }
        return 0;
    }
};

//! Possible relations of the query key to the literal of the most recent
//! comparison at entry of each instruction, joined over all paths. An
//! undefined flag is the full mask.
inline std::vector<std::uint8_t> flag_states(const Program& p) {
    const std::size_t n = p.code.size();
    std::vector<std::uint8_t> mask(n, 0);
    std::vector<bool> seen(n, false);
    const auto flow = [&](std::size_t t, std::uint8_t m) {
        if (t >= n)
            return;
        mask[t] = static_cast<std::uint8_t>(mask[t] | m);
        seen[t] = true;
    };
    flow(0, rel_any);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t m = seen[i] ? mask[i] : rel_any;
        switch (p.code[i].op) {
        case Op::cmp: flow(i + 1, rel_any); break;
        case Op::set_value: flow(i + 1, m); break;
        case Op::br_lt:
            flow(p.code[i].arg, m & rel_lt);
            flow(i + 1, m & ~rel_lt);
            break;
        case Op::br_eq:
            flow(p.code[i].arg, m & rel_eq);
            flow(i + 1, m & ~rel_eq);
            break;
        case Op::br_gt:
            flow(p.code[i].arg, m & rel_gt);
            flow(i + 1, m & ~rel_gt);
            break;
        case Op::jmp: flow(p.code[i].arg, m); break;
        default: break;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i])
            mask[i] = rel_any;
    return mask;
}

} // namespace detail

//! Renders a validated program to GNU assembler text (Intel syntax) and a
//! byte-exact size model of it. The emitter reuses the flag register across
//! control flow: a return site whose incoming comparison already proves the
//! answer compiles to a bare 1-byte ret, adjacent below/equal branches with
//! one destination fuse to jbe, and a leaf pair that ends its chain
//! compiles to ret with the flags deciding the outcome in the caller.
inline EmitResult emit_native(const Program& p, const EmitOptions& opt = {}) {
    using detail::NativeItem;
    using Kind = NativeItem::Kind;
    validate(p);

    const std::size_t n = p.code.size();
    const std::vector<std::uint8_t> mask = detail::flag_states(p);

    std::vector<bool> is_target(n, false);
    for (const Instr& in : p.code)
        if (in.op == Op::jmp || in.op == Op::br_lt || in.op == Op::br_eq || in.op == Op::br_gt)
            is_target[in.arg] = true;

    // return sites that need no flag fixup compile to a bare ret
    std::vector<bool> bare(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (p.code[i].op == Op::ret_found)
            bare[i] = (mask[i] & ~detail::rel_eq) == 0;
        else if (p.code[i].op == Op::ret_notfound)
            bare[i] = (mask[i] & detail::rel_eq) == 0;
    }
    const auto bare_pair = [&](std::size_t f, std::size_t nf) {
        return f < n && nf < n && p.code[f].op == Op::ret_found && bare[f] &&
               p.code[nf].op == Op::ret_notfound && bare[nf];
    };

    std::vector<NativeItem> items;
    std::vector<std::size_t> entry(n, 0);
    EmitResult res;

    std::size_t i = 0;
    while (i < n) {
        entry[i] = items.size();
        const Instr& in = p.code[i];
        switch (in.op) {
        case Op::cmp:
            items.push_back({Kind::cmp_key, in.region, in.arg, 0, "", false});
            if (in.region == Region::internal)
                ++res.internal_keys;
            else if (in.region == Region::leaf)
                ++res.leaf_pairs;
            ++i;
            break;
        case Op::set_value:
            items.push_back({Kind::mov_value, in.region, in.arg, 0, "", false});
            ++i;
            break;
        case Op::br_lt:
            if (i + 1 < n && p.code[i + 1].op == Op::br_eq && p.code[i + 1].arg == in.arg &&
                !is_target[i + 1]) {
                items.push_back({Kind::jcc, in.region, 0, in.arg, "be", false});
                entry[i + 1] = entry[i];
                i += 2;
            } else {
                items.push_back({Kind::jcc, in.region, 0, in.arg, "b", false});
                ++i;
            }
            break;
        case Op::br_eq:
            if (i + 1 < n && p.code[i + 1].op == Op::br_lt && !is_target[i + 1] &&
                bare_pair(in.arg, p.code[i + 1].arg)) {
                // below or equal both end the search; the shared ret decides
                // by the zero flag
                items.push_back({Kind::jcc, in.region, 0, in.arg, "be", false});
                entry[i + 1] = entry[i];
                i += 2;
            } else if (i + 1 < n && p.code[i + 1].op == Op::jmp && !is_target[i + 1] &&
                       bare_pair(in.arg, p.code[i + 1].arg)) {
                items.push_back({Kind::ret, in.region, 0, 0, "", false});
                entry[i + 1] = entry[i];
                i += 2;
            } else {
                items.push_back({Kind::jcc, in.region, 0, in.arg, "e", false});
                ++i;
            }
            break;
        case Op::br_gt:
            items.push_back({Kind::jcc, in.region, 0, in.arg, "a", false});
            ++i;
            break;
        case Op::jmp:
            if (bare[in.arg]) {
                items.push_back({Kind::ret, in.region, 0, 0, "", false});
            } else if (p.code[in.arg].op == Op::ret_notfound) {
                items.push_back({Kind::force_ne, in.region, 0, 0, "", false});
                items.push_back({Kind::ret, in.region, 0, 0, "", false});
            } else if (p.code[in.arg].op == Op::ret_found) {
                items.push_back({Kind::force_eq, in.region, 0, 0, "", false});
                items.push_back({Kind::ret, in.region, 0, 0, "", false});
            } else {
                items.push_back({Kind::jmp, in.region, 0, in.arg, "", false});
            }
            ++i;
            break;
        case Op::ret_found:
            if (!bare[i])
                items.push_back({Kind::force_eq, in.region, 0, 0, "", false});
            items.push_back({Kind::ret, in.region, 0, 0, "", false});
            ++i;
            break;
        case Op::ret_notfound:
            // an adjacent bare found/not-found pair shares one ret, the
            // incoming flags distinguish the outcomes
            if (bare[i] && i > 0 && p.code[i - 1].op == Op::ret_found && bare[i - 1] &&
                entry[i - 1] + 1 == items.size()) {
                entry[i] = entry[i - 1];
            } else {
                if (!bare[i])
                    items.push_back({Kind::force_ne, in.region, 0, 0, "", false});
                items.push_back({Kind::ret, in.region, 0, 0, "", false});
            }
            ++i;
            break;
        case Op::fallback:
            items.push_back({Kind::jmp_ext, in.region, static_cast<std::uint32_t>(i), 0, "", false});
            ++res.fallbacks;
            ++i;
            break;
        }
    }

    // widen relative branches until every displacement fits
    std::vector<std::size_t> off(items.size() + 1, 0);
    for (bool changed = true; changed;) {
        off.assign(items.size() + 1, 0);
        for (std::size_t k = 0; k < items.size(); ++k)
            off[k + 1] = off[k] + items[k].bytes();
        changed = false;
        for (std::size_t k = 0; k < items.size(); ++k) {
            NativeItem& it = items[k];
            if ((it.kind != Kind::jcc && it.kind != Kind::jmp) || it.wide)
                continue;
            const auto from = static_cast<std::int64_t>(off[k] + 2);
            const auto to = static_cast<std::int64_t>(off[entry[it.target]]);
            if (to - from < -128 || to - from > 127) {
                it.wide = true;
                changed = true;
            }
        }
    }

    for (const NativeItem& it : items) {
        res.body_bytes += it.bytes();
        res.region_bytes[static_cast<std::size_t>(it.region)] += it.bytes();
    }
    const std::size_t preamble_bytes = 27;
    res.total_bytes = res.body_bytes + (opt.preamble ? preamble_bytes : 0);
    if (opt.preamble)
        res.region_bytes[static_cast<std::size_t>(Region::glue)] += preamble_bytes;

    if (!opt.text)
        return res;

    std::string& out = res.text;
    out += "\t.intel_syntax noprefix\n\t.text\n";
    if (opt.preamble) {
        out += "\t.globl " + opt.symbol + "\n";
        out += "\t.type " + opt.symbol + ", @function\n";
        out += opt.symbol + ":\n";
        out += "\tpush rbp\n";
        out += "\tmov rbp, rsp\n";
        // key into eax, the accumulator form of cmp is a byte shorter
        out += "\tmov eax, edi\n";
        out += "\tcall .Lsearch\n";
        // mov leaves the comparison flags of the search body intact
        out += "\tmov eax, 0\n";
        out += "\tjne .Lout\n";
        out += "\tmov eax, 1\n";
        out += "\tmov [rsi], ecx\n";
        out += ".Lout:\n";
        out += "\tleave\n";
        out += "\tret\n";
    }
    out += ".Lsearch:\n";

    std::vector<bool> labeled(n, false);
    for (std::size_t k = 0; k < n; ++k)
        labeled[k] = is_target[k];
    const auto label_of = [&](std::size_t ir) { return ".L" + std::to_string(ir); };

    std::vector<std::string> label_at(items.size());
    for (std::size_t k = 0; k < n; ++k)
        if (labeled[k] && entry[k] < items.size())
            label_at[entry[k]] += label_of(k) + ":\n";

    for (std::size_t k = 0; k < items.size(); ++k) {
        const NativeItem& it = items[k];
        out += label_at[k];
        switch (it.kind) {
        case Kind::cmp_key:
            out += "\tcmp eax, " + std::to_string(it.imm) + "\n";
            break;
        case Kind::mov_value:
            out += "\tmov ecx, " + std::to_string(it.imm) + "\n";
            break;
        case Kind::jcc:
            out += "\tj" + std::string(it.cc) + " " + label_of(it.target) + "\n";
            break;
        case Kind::jmp:
            out += "\tjmp " + label_of(it.target) + "\n";
            break;
        case Kind::jmp_ext:
            out += "\tjmp " + opt.symbol + "_fb_" + std::to_string(it.imm) + "\n";
            break;
        case Kind::ret:
            out += "\tret\n";
            break;
        case Kind::force_ne:
            out += "\tor al, 1\n";
            break;
        case Kind::force_eq:
            out += "\tcmp eax, eax\n";
            break;
        }
    }
    if (opt.preamble)
        out += "\t.size " + opt.symbol + ", . - " + opt.symbol + "\n";
    return res;
}

//! Byte size the emitted function would have, without rendering text.
inline std::size_t native_size_estimate(const Program& p) {
    EmitOptions opt;
    opt.text = false;
    return emit_native(p, opt).total_bytes;
}

//! Largest compiled level count whose emitted function still fits the
//! instruction budget. compile(L) must return the program for L levels.
template <typename Compile>
std::size_t choose_levels(Compile&& compile, std::size_t max_levels, std::size_t budget_bytes) {
    std::size_t best = 0;
    std::size_t last_size = 0;
    for (std::size_t l = 0; l <= max_levels; ++l) {
        const Program p = compile(l);
        const std::size_t size = native_size_estimate(p);
        if (size > budget_bytes)
            break;
        best = l;
        if (l > 0 && size == last_size)
            break;
        last_size = size;
    }
    return best;
}

inline const char* region_name(Region r) {
    switch (r) {
    case Region::internal: return "internal";
    case Region::leaf: return "leaf";
    case Region::fallback: return "fallback";
    case Region::glue: return "glue";
    }
    return "?";
}

//! Per-region byte accounting of an emitted function, one CSV row per
//! region plus a total. The keys column counts compiled separators for the
//! internal region and compiled key-value pairs for the leaf region.
inline std::string size_report_csv(const EmitResult& r) {
    std::string out = "region,bytes,keys,bytes_per_key\n";
    const auto row = [&](Region reg, std::size_t keys) {
        const std::size_t bytes = r.region_bytes[static_cast<std::size_t>(reg)];
        out += std::string(region_name(reg)) + "," + std::to_string(bytes) + "," +
               std::to_string(keys) + ",";
        if (keys > 0)
            out += std::to_string(static_cast<double>(bytes) / static_cast<double>(keys));
        out += "\n";
    };
    row(Region::internal, r.internal_keys);
    row(Region::leaf, r.leaf_pairs);
    row(Region::fallback, r.fallbacks);
    row(Region::glue, 0);
    out += "total," + std::to_string(r.total_bytes) + "," +
           std::to_string(r.internal_keys + r.leaf_pairs) + ",\n";
    return out;
}

} // namespace nitro
