#pragma once

// UTF-8 helpers shared by the generator and the oracle parser.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace intentkit::text {

// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD, one
// replacement per offending byte.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Letters are ASCII alphabetics plus the Latin-1 Supplement / Latin
// Extended-A/B letter ranges, which covers the shipped languages.
bool is_letter(char32_t c);
bool is_digit(char32_t c);
char32_t to_lower(char32_t c);
std::u32string to_lower(std::u32string_view s);
std::string to_lower(std::string_view s);

std::string trim(std::string_view s);

// Optimal-string-alignment distance (Levenshtein plus adjacent transposition).
std::size_t osa_distance(std::u32string_view a, std::u32string_view b);

// Lowercased runs of letters/digits. A run never mixes letters and digits,
// so "12apples" yields {"12", "apples"}.
struct Token {
  std::u32string text;
  bool numeric = false;
};
std::vector<Token> word_tokens(std::string_view s);

// Whitespace-delimited count; the fallback token counter.
std::size_t count_whitespace_tokens(std::string_view s);

}  // namespace intentkit::text
