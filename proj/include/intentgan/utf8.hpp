#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace intentgan::utf8 {

/// Decodes `text` into Unicode scalar values. Returns false on ill-formed
/// input (overlong forms, surrogates, truncated sequences, values > U+10FFFF).
bool decode(std::string_view text, std::vector<char32_t>& out);

bool is_valid(std::string_view text);

void append(std::string& out, char32_t cp);

std::string encode(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end);

/// Unicode White_Space property.
bool is_space(char32_t cp) noexcept;

/// Maximal runs of non-whitespace scalars. Invalid UTF-8 is treated bytewise
/// (each byte its own scalar) so tokenization never fails.
std::vector<std::string> split_whitespace(std::string_view text);

std::size_t count_tokens(std::string_view text);

/// Number of Unicode scalars (bytes, for ill-formed input).
std::size_t count_scalars(std::string_view text);

}  // namespace intentgan::utf8
