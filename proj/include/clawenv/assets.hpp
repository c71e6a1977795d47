// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>

namespace clawenv {

/// Prompt templates and config files compiled into the binary, keyed by relative path
/// ("prompts/task_generation.txt", "config/categories.json").
const std::map<std::string, std::string_view>& embedded_assets();

/// Throws std::out_of_range for an unknown asset.
std::string_view asset(std::string_view name);

/// Replaces every "{{key}}" in `tmpl`.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

}  // namespace clawenv
