#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace airbraille {

// Cells 1,2,3 are the left column top to bottom; 4,5,6 the right column.
inline constexpr int kCellCount = 6;

class DotPattern {
public:
    constexpr DotPattern() = default;

    static DotPattern from_cells(std::initializer_list<int> cells);
    static DotPattern from_cells(const std::vector<int>& cells);
    // Parses sorted or unsorted cell digits, e.g. "1245". Empty string is the
    // empty pattern.
    static DotPattern parse(std::string_view text);
    static constexpr DotPattern from_mask(std::uint8_t mask) {
        DotPattern p;
        p.mask_ = static_cast<std::uint8_t>(mask & 0x3F);
        return p;
    }

    bool contains(int cell) const noexcept {
        return cell >= 1 && cell <= kCellCount && (mask_ >> (cell - 1)) & 1U;
    }
    bool empty() const noexcept { return mask_ == 0; }
    int size() const noexcept;
    std::vector<int> cells() const;
    std::uint8_t mask() const noexcept { return mask_; }

    // Sorted cell digits: {1,2,4,5} -> "1245".
    std::string to_string() const;
    // Set notation used by the CLI: "{1,2,4,5}".
    std::string to_set_string() const;

    DotPattern operator-(DotPattern other) const noexcept {
        return from_mask(static_cast<std::uint8_t>(mask_ & ~other.mask_));
    }
    DotPattern operator|(DotPattern other) const noexcept {
        return from_mask(static_cast<std::uint8_t>(mask_ | other.mask_));
    }
    DotPattern operator&(DotPattern other) const noexcept {
        return from_mask(static_cast<std::uint8_t>(mask_ & other.mask_));
    }
    friend bool operator==(DotPattern, DotPattern) = default;

private:
    std::uint8_t mask_ = 0;
};

// Full decodes to letters a-z and space.
enum class Alphabet { DigitsOnly, Full };

DotPattern encode_char(char c);
std::optional<char> decode_pattern(DotPattern pattern, Alphabet alphabet);

struct PatternDiff {
    DotPattern missing;  // in truth, not in response
    DotPattern extra;    // in response, not in truth
};

PatternDiff pattern_diff(DotPattern truth, DotPattern response);

// The ten digits in label order '0'..'9'.
const std::vector<char>& digit_labels();
// Every character with a pattern: digits, letters and space.
const std::vector<char>& known_characters();

}  // namespace airbraille
