#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nitro/column.hpp"

namespace nitro {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b = {
        static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
        static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), b.size());
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), b.size());
    if (!is)
        throw std::runtime_error("column file: truncated");
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

inline std::uint64_t get_u64(std::istream& is) {
    const std::uint64_t lo = get_u32(is);
    const std::uint64_t hi = get_u32(is);
    return lo | hi << 32;
}

} // namespace detail

inline constexpr char column_magic[4] = {'N', 'T', 'R', 'C'};

//! Writes a column as: magic "NTRC", u64 tuple count, then count times
//! (u32 key, u32 value), everything little-endian.
inline void write_column(const SortedColumn& col, std::ostream& os) {
    os.write(column_magic, 4);
    detail::put_u64(os, col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
        detail::put_u32(os, col.keys[i]);
        detail::put_u32(os, col.values[i]);
    }
    if (!os)
        throw std::runtime_error("column file: write failed");
}

//! Reads a column written by write_column. Rejects bad magic, truncation,
//! descending keys, and sentinel keys.
inline SortedColumn read_column(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != std::string(column_magic, 4))
        throw std::runtime_error("column file: bad magic");
    const std::uint64_t n = detail::get_u64(is);
    SortedColumn col;
    col.keys.reserve(n);
    col.values.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const key_type k = detail::get_u32(is);
        const value_type v = detail::get_u32(is);
        if (k == max_sentinel)
            throw std::runtime_error("column file: sentinel key");
        if (i > 0 && k < col.keys.back())
            throw std::runtime_error("column file: keys not ascending");
        col.keys.push_back(k);
        col.values.push_back(v);
    }
    return col;
}

inline void write_column_file(const SortedColumn& col, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open for writing: " + path);
    write_column(col, os);
}

inline SortedColumn read_column_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open: " + path);
    return read_column(is);
}

//! Imports "key,value" lines (comma or whitespace separated). A first line
//! that does not parse as numbers is treated as a header and skipped.
//! Tuples need not be sorted; the result is a sorted column.
inline SortedColumn import_csv(std::istream& is) {
    std::vector<std::pair<key_type, value_type>> pairs;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        for (auto& ch : line)
            if (ch == ',' || ch == ';' || ch == '\t')
                ch = ' ';
        std::istringstream fields(line);
        std::uint64_t k = 0, v = 0;
        if (!(fields >> k >> v)) {
            if (first) {
                first = false;
                continue;
            }
            throw std::runtime_error("csv import: unparsable line: " + line);
        }
        first = false;
        if (k >= max_sentinel || v > 0xffffffffull)
            throw std::runtime_error("csv import: field out of range: " + line);
        pairs.emplace_back(static_cast<key_type>(k), static_cast<value_type>(v));
    }
    return build_column(std::move(pairs));
}

inline SortedColumn import_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open: " + path);
    return import_csv(is);
}

} // namespace nitro
