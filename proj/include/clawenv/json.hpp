// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace clawenv {

using Json = nlohmann::ordered_json;

/// Field locator ("scoring_components[2].weight") to 1-based source line.
using LineIndex = std::map<std::string, int>;

/// Parses a YAML (or JSON, which is accepted as a YAML surface) document.
/// Plain scalars are typed (null/bool/int/float/string); quoted scalars stay strings.
/// Throws ParseError on syntax errors.
Json parse_yaml(std::string_view text, LineIndex* lines = nullptr);

/// Emits YAML that parse_yaml reads back to an equal Json value.
std::string emit_yaml(const Json& value);

/// Pulls the first JSON object out of free-form model output (code fences, prose around it).
std::optional<Json> extract_json_object(std::string_view text);

/// Strips a surrounding ```yaml / ``` fence if present.
std::string strip_code_fence(std::string_view text);

}  // namespace clawenv
