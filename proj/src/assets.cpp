// SPDX-License-Identifier: Apache-2.0
#include "clawenv/assets.hpp"

#include "clawenv/text.hpp"

#include <stdexcept>

namespace clawenv {

std::string_view asset(std::string_view name) {
  const auto& all = embedded_assets();
  auto it = all.find(std::string(name));
  if (it == all.end()) throw std::out_of_range("no embedded asset " + std::string(name));
  return it->second;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out(tmpl);
  for (const auto& [k, v] : vars) out = replace_all(std::move(out), "{{" + k + "}}", v);
  return out;
}

}  // namespace clawenv
