#include "braille.hpp"

#include "error.hpp"

#include <array>
#include <bit>
#include <cctype>

namespace airbraille {
namespace {

struct Entry {
    char symbol;
    const char* cells;
};

// Standard six-dot letters; digits reuse a-j without the number sign.
constexpr std::array<Entry, 26> kLetters{{
    {'a', "1"},    {'b', "12"},    {'c', "14"},   {'d', "145"},   {'e', "15"},
    {'f', "124"},  {'g', "1245"},  {'h', "125"},  {'i', "24"},    {'j', "245"},
    {'k', "13"},   {'l', "123"},   {'m', "134"},  {'n', "1345"},  {'o', "135"},
    {'p', "1234"}, {'q', "12345"}, {'r', "1235"}, {'s', "234"},   {'t', "2345"},
    {'u', "136"},  {'v', "1236"},  {'w', "2456"}, {'x', "1346"},  {'y', "13456"},
    {'z', "1356"},
}};

DotPattern digit_pattern(char digit) {
    // '1'..'9' -> a..i, '0' -> j
    const int index = digit == '0' ? 9 : digit - '1';
    return DotPattern::parse(kLetters[static_cast<std::size_t>(index)].cells);
}

}  // namespace

DotPattern DotPattern::from_cells(std::initializer_list<int> cells) {
    return from_cells(std::vector<int>(cells));
}

DotPattern DotPattern::from_cells(const std::vector<int>& cells) {
    std::uint8_t mask = 0;
    for (int cell : cells) {
        if (cell < 1 || cell > kCellCount) {
            fail(ErrorCode::InvalidCell, "cell index out of range: " + std::to_string(cell));
        }
        const auto bit = static_cast<std::uint8_t>(1U << (cell - 1));
        if (mask & bit) {
            fail(ErrorCode::InvalidCell, "duplicate cell index: " + std::to_string(cell));
        }
        mask |= bit;
    }
    return from_mask(mask);
}

DotPattern DotPattern::parse(std::string_view text) {
    std::vector<int> cells;
    for (char ch : text) {
        if (ch < '1' || ch > '6') {
            fail(ErrorCode::InvalidCell, "invalid cell digit in pattern: '" + std::string(text) + "'");
        }
        cells.push_back(ch - '0');
    }
    return from_cells(cells);
}

int DotPattern::size() const noexcept { return std::popcount(mask_); }

std::vector<int> DotPattern::cells() const {
    std::vector<int> out;
    for (int cell = 1; cell <= kCellCount; ++cell) {
        if (contains(cell)) out.push_back(cell);
    }
    return out;
}

std::string DotPattern::to_string() const {
    std::string out;
    for (int cell : cells()) out.push_back(static_cast<char>('0' + cell));
    return out;
}

std::string DotPattern::to_set_string() const {
    std::string out = "{";
    bool first = true;
    for (int cell : cells()) {
        if (!first) out.push_back(',');
        out.push_back(static_cast<char>('0' + cell));
        first = false;
    }
    out.push_back('}');
    return out;
}

DotPattern encode_char(char c) {
    const auto uc = static_cast<unsigned char>(c);
    if (c == ' ') return DotPattern{};
    if (std::isdigit(uc)) return digit_pattern(c);
    if (std::isalpha(uc)) {
        const char lower = static_cast<char>(std::tolower(uc));
        return DotPattern::parse(kLetters[static_cast<std::size_t>(lower - 'a')].cells);
    }
    fail(ErrorCode::UnknownCharacter, std::string("no Braille pattern for character '") + c + "'");
}

std::optional<char> decode_pattern(DotPattern pattern, Alphabet alphabet) {
    if (alphabet == Alphabet::DigitsOnly) {
        for (char d : digit_labels()) {
            if (digit_pattern(d) == pattern) return d;
        }
        return std::nullopt;
    }
    // Without a number sign, a-j and the digits share patterns; the full
    // alphabet resolves to letters.
    for (const auto& entry : kLetters) {
        if (DotPattern::parse(entry.cells) == pattern) return entry.symbol;
    }
    if (pattern.empty()) return ' ';
    return std::nullopt;
}

PatternDiff pattern_diff(DotPattern truth, DotPattern response) {
    return PatternDiff{truth - response, response - truth};
}

const std::vector<char>& digit_labels() {
    static const std::vector<char> labels{'0', '1', '2', '3', '4', '5', '6', '7', '8', '9'};
    return labels;
}

const std::vector<char>& known_characters() {
    static const std::vector<char> chars = [] {
        std::vector<char> out(digit_labels());
        for (const auto& entry : kLetters) out.push_back(entry.symbol);
        out.push_back(' ');
        return out;
    }();
    return chars;
}

}  // namespace airbraille
