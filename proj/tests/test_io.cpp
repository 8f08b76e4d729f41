#include <cstdio>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "nitro/column.hpp"
#include "nitro/io.hpp"

using namespace nitro;

namespace {

std::string serialized(const SortedColumn& col) {
    std::ostringstream out;
    write_column(col, out);
    return out.str();
}

SortedColumn parsed(const std::string& bytes) {
    std::istringstream in(bytes);
    return read_column(in);
}

} // namespace

TEST_CASE("column files round-trip") {
    const SortedColumn col = build_column({{1, 10}, {7, 11}, {7, 12}, {200, 13}});
    const SortedColumn back = parsed(serialized(col));
    CHECK(back.keys == col.keys);
    CHECK(back.values == col.values);
}

TEST_CASE("empty column round-trips") {
    const SortedColumn back = parsed(serialized(SortedColumn{}));
    CHECK(back.size() == 0);
}

TEST_CASE("column file layout is little-endian with magic header") {
    const std::string bytes = serialized(build_column({{0x01020304, 0x0A0B0C0D}}));
    REQUIRE(bytes.size() == 4 + 8 + 8);
    CHECK(bytes.substr(0, 4) == "NTRC");
    const std::string expected_n{"\x01\x00\x00\x00\x00\x00\x00\x00", 8};
    CHECK(bytes.substr(4, 8) == expected_n);
    const std::string expected_pair{"\x04\x03\x02\x01\x0D\x0C\x0B\x0A", 8};
    CHECK(bytes.substr(12, 8) == expected_pair);
}

TEST_CASE("reader rejects malformed files") {
    const std::string good = serialized(build_column({{1, 0}, {2, 0}}));

    SECTION("wrong magic") {
        std::string bad = good;
        bad[0] = 'X';
        CHECK_THROWS_AS(parsed(bad), std::runtime_error);
    }
    SECTION("truncated payload") {
        CHECK_THROWS_AS(parsed(good.substr(0, good.size() - 3)), std::runtime_error);
    }
    SECTION("descending keys") {
        std::string bad = serialized(build_column({{5, 0}, {6, 0}}));
        bad[12] = 9; // first key becomes 9 > 6
        CHECK_THROWS_AS(parsed(bad), std::runtime_error);
    }
    SECTION("sentinel key") {
        std::string bad = good;
        bad[12] = bad[13] = bad[14] = bad[15] = '\xFF';
        bad[20] = bad[21] = bad[22] = bad[23] = '\xFF';
        CHECK_THROWS_AS(parsed(bad), std::runtime_error);
    }
}

TEST_CASE("column files survive a disk round-trip") {
    const std::string path = "io_test_column.ntrc";
    const SortedColumn col = build_column({{3, 30}, {9, 31}});
    write_column_file(col, path);
    const SortedColumn back = read_column_file(path);
    CHECK(back.keys == col.keys);
    CHECK(back.values == col.values);
    std::remove(path.c_str());
}

TEST_CASE("csv import parses, sorts and skips a header") {
    std::istringstream in("key,value\n5,50\n1,10\n3;30\n7\t70\n");
    const SortedColumn col = import_csv(in);
    CHECK(col.keys == std::vector<key_type>{1, 3, 5, 7});
    CHECK(col.values == std::vector<value_type>{10, 30, 50, 70});
}

TEST_CASE("csv import without header") {
    std::istringstream in("2,20\n4,40\n");
    const SortedColumn col = import_csv(in);
    CHECK(col.keys == std::vector<key_type>{2, 4});
}

TEST_CASE("csv import rejects out-of-range and malformed rows") {
    std::istringstream sentinel("4294967295,1\n");
    CHECK_THROWS_AS(import_csv(sentinel), std::runtime_error);
    std::istringstream huge("99999999999,1\n");
    CHECK_THROWS_AS(import_csv(huge), std::runtime_error);
    std::istringstream garbage("12,5\nbroken,row,here\n");
    CHECK_THROWS_AS(import_csv(garbage), std::runtime_error);
}
