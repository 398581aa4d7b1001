/// @file text.hpp
/// @brief Shared text utilities: word tokenization, sentence splitting, hashing.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mole::text {

/// Lowercased word tokens. Whitespace and ASCII punctuation separate tokens
/// and are dropped, except apostrophes and underscores inside a word, which
/// are kept; bytes >= 0x80 are treated as word characters so UTF-8
/// text survives intact.
std::vector<std::string> word_tokens(std::string_view text);

/// Splits on `.`, `!` or `?` followed by whitespace or end of text. Each
/// returned sentence keeps its terminator and has surrounding whitespace trimmed.
std::vector<std::string> split_sentences(std::string_view text);

std::string join_sentences(const std::vector<std::string>& sentences);

std::string_view trim(std::string_view s);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

/// UTC timestamp, ISO 8601 with second resolution.
std::string utc_timestamp();

}  // namespace mole::text
