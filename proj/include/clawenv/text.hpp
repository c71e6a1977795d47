// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace clawenv {

std::string to_lower(std::string_view s);

/// Case-insensitive substring test.
bool icontains(std::string_view haystack, std::string_view needle);

/// Case-insensitive match bounded by non-alphanumeric characters (or string edges).
bool icontains_word(std::string_view haystack, std::string_view needle);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::string trim(std::string_view s);

/// Number of Unicode code points; invalid bytes count one each.
std::size_t utf8_length(std::string_view s);

bool is_valid_utf8(std::string_view s);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

/// Every "/workspace/..." path token in the text, in order of appearance.
std::vector<std::string> workspace_refs(std::string_view text);

}  // namespace clawenv
