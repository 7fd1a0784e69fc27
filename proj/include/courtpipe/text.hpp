#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace courtpipe::text {

/// True for CJK unified ideographs (including extensions A/B and the
/// compatibility block). Punctuation and fullwidth forms are excluded.
bool is_cjk(char32_t cp);

/// Decodes one UTF-8 sequence starting at `pos`. Invalid bytes decode as
/// U+FFFD and consume a single byte. Returns the codepoint and advances pos.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

/// Number of codepoints in a UTF-8 string (invalid bytes count as one each).
std::int64_t utf8_length(std::string_view s);

std::string to_lower_ascii(std::string_view s);

/// Trims ends and collapses interior whitespace runs to single spaces.
std::string collapse_whitespace(std::string_view s);

/// Lowercased word tokens for the free-text normalizers: ASCII alnum runs
/// (commas kept only between digits, so "5,000" stays one token), each CJK
/// character as its own token, everything else a separator. Hyphens and
/// apostrophes separate.
std::vector<std::string> word_tokens(std::string_view s);

/// True if `tok` can participate in a spelled-out or digit number
/// ("three", "twenty", "thousand", "44", "5,000").
bool is_number_token(const std::string& tok);

/// Value of tokens[begin, end) read as an English number-word phrase or a
/// digit group. Returns nullopt when the range is empty or malformed.
std::optional<long long> parse_number_tokens(const std::vector<std::string>& toks,
                                             std::size_t begin, std::size_t end);

}  // namespace courtpipe::text
