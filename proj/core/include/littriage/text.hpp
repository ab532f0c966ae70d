#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace littriage {

/// Trims the ends and collapses internal whitespace runs to one space.
std::string collapse_whitespace(std::string_view text);

bool is_blank(std::string_view text) noexcept;

/// Number of UTF-8 code points; continuation bytes are not counted.
std::size_t utf8_length(std::string_view text) noexcept;

/// Cuts `text` to at most `max_chars` code points, backing off to the last
/// whitespace boundary when there is one. Never splits a code point.
std::string truncate_at_word(std::string_view text, std::size_t max_chars);

/// Lower-cased word tokens: maximal runs of ASCII alphanumerics or non-ASCII
/// bytes. Punctuation separates tokens.
std::vector<std::string> word_tokens(std::string_view text);

/// Filesystem-safe rendering of a display name ("Article Type" -> "Article_Type").
std::string slugify(std::string_view name);

/// Shortest representation that round-trips through strtod.
std::string format_double(double value);

std::string format_fixed(double value, int decimals);

}  // namespace littriage
