#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sso::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string join(std::span<const std::string> parts, std::string_view sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Lowercase, collapse whitespace, and rewrite every bracketed span ("[liquid]")
/// to a single "[x]" placeholder. Used to compare skill subgoals.
std::string normalize_subgoal(std::string_view s);

/// Lowercase, collapse whitespace, and strip trailing punctuation. Used to
/// match an actor's self-reported subgoal against the offered ones.
std::string normalize_reported(std::string_view s);

/// Lowercase hex SHA-256 digest of the bytes of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace sso::text
