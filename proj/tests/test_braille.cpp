#include <doctest.h>

#include "braille.hpp"
#include "error.hpp"
#include "oracles.hpp"

#include <random>
#include <set>

using namespace airbraille;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("digits and letters match the unicode braille block") {
    for (char c : known_characters()) {
        if (c == ' ') continue;
        CAPTURE(c);
        CHECK(encode_char(c).mask() == oracle::braille_mask(c));
    }
    for (char c = 'A'; c <= 'Z'; ++c) CHECK(encode_char(c) == encode_char(static_cast<char>(c - 'A' + 'a')));
}

TEST_CASE("digit cell sets") {
    CHECK(encode_char('8') == DotPattern::from_cells({1, 2, 5}));
    CHECK(encode_char('5') == DotPattern::from_cells({1, 5}));
    CHECK(encode_char('9') == DotPattern::from_cells({2, 4}));
    CHECK(encode_char('6') == DotPattern::from_cells({1, 2, 4}));
    CHECK(encode_char('4') == DotPattern::from_cells({1, 4, 5}));
    CHECK(encode_char('0') == DotPattern::from_cells({2, 4, 5}));
    CHECK(encode_char('7') == DotPattern::from_cells({1, 2, 4, 5}));
    CHECK(encode_char('3') == DotPattern::from_cells({1, 4}));
    CHECK(encode_char('1') == DotPattern::from_cells({1}));
}

TEST_CASE("space is empty, unknown characters fail") {
    CHECK(encode_char(' ').empty());
    CHECK(code_of([] { encode_char('?'); }) == ErrorCode::UnknownCharacter);
    CHECK(code_of([] { encode_char('\n'); }) == ErrorCode::UnknownCharacter);
}

TEST_CASE("digits use only the upper two rows and are distinct") {
    std::set<std::uint8_t> seen;
    for (char d : digit_labels()) {
        const DotPattern p = encode_char(d);
        CHECK_FALSE(p.contains(3));
        CHECK_FALSE(p.contains(6));
        CHECK(seen.insert(p.mask()).second);
    }
    CHECK(seen.size() == 10);
}

TEST_CASE("decode inverts encode") {
    for (char d : digit_labels()) CHECK(decode_pattern(encode_char(d), Alphabet::DigitsOnly) == d);
    for (char c = 'a'; c <= 'z'; ++c) CHECK(decode_pattern(encode_char(c), Alphabet::Full) == c);
    CHECK(decode_pattern(DotPattern{}, Alphabet::Full) == ' ');
    CHECK_FALSE(decode_pattern(DotPattern::from_cells({6}), Alphabet::Full).has_value());
    CHECK_FALSE(decode_pattern(DotPattern::from_cells({3}), Alphabet::DigitsOnly).has_value());
}

TEST_CASE("parse and print round trip over all 64 patterns") {
    for (unsigned m = 0; m < 64; ++m) {
        const DotPattern p = DotPattern::from_mask(static_cast<std::uint8_t>(m));
        CHECK(DotPattern::parse(p.to_string()) == p);
        CHECK(p.size() == static_cast<int>(oracle::cells_of_mask(static_cast<std::uint8_t>(m)).size()));
    }
    CHECK(DotPattern::parse("5421") == DotPattern::from_cells({1, 2, 4, 5}));
    CHECK(encode_char('7').to_set_string() == "{1,2,4,5}");
    CHECK(DotPattern{}.to_set_string() == "{}");
}

TEST_CASE("invalid cells are rejected") {
    CHECK(code_of([] { DotPattern::from_cells({7}); }) == ErrorCode::InvalidCell);
    CHECK(code_of([] { DotPattern::from_cells({0}); }) == ErrorCode::InvalidCell);
    CHECK(code_of([] { DotPattern::from_cells({2, 2}); }) == ErrorCode::InvalidCell);
    CHECK(code_of([] { DotPattern::parse("12x"); }) == ErrorCode::InvalidCell);
}

TEST_CASE("pattern_diff agrees with set arithmetic on every pair") {
    for (unsigned a = 0; a < 64; ++a) {
        for (unsigned b = 0; b < 64; ++b) {
            const auto ta = static_cast<std::uint8_t>(a), tb = static_cast<std::uint8_t>(b);
            const PatternDiff d = pattern_diff(DotPattern::from_mask(ta), DotPattern::from_mask(tb));
            const auto missing = oracle::set_minus(oracle::cells_of_mask(ta), oracle::cells_of_mask(tb));
            const auto extra = oracle::set_minus(oracle::cells_of_mask(tb), oracle::cells_of_mask(ta));
            const auto got_missing = d.missing.cells();
            const auto got_extra = d.extra.cells();
            REQUIRE(std::set<int>(got_missing.begin(), got_missing.end()) == missing);
            REQUIRE(std::set<int>(got_extra.begin(), got_extra.end()) == extra);
            // reconstructing the response from truth and diff
            REQUIRE(((DotPattern::from_mask(ta) - d.missing) | d.extra) == DotPattern::from_mask(tb));
        }
    }
}
