// SPDX-License-Identifier: Apache-2.0
#include "clawenv/quality.hpp"

#include "clawenv/assets.hpp"
#include "clawenv/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace clawenv {

int validity(const TaskConfig& cfg, const ServiceRegistry& registry) {
  for (const auto& issue : validate_structure(cfg, registry)) {
    switch (issue.check_id) {
      case 3:
      case 4:
      case 8:
      case 9: return 0;
      default: break;
    }
  }
  return 1;
}

namespace {

QualityScore ask(const std::string& prompt, const LlmClient& llm, double timeout_s, double lo, double hi,
                 double fallback) {
  try {
    ChatResponse res = llm.complete_chat(ChatRequest::simple("", prompt, timeout_s));
    auto j = extract_json_object(res.text);
    if (j && j->contains("score") && (*j)["score"].is_number()) {
      return QualityScore{std::clamp((*j)["score"].get<double>(), lo, hi), j->value("reasoning", std::string{}), false};
    }
    return QualityScore{fallback, "unparseable judge response", true};
  } catch (const ProviderError& e) {
    return QualityScore{fallback, std::string("judge call failed: ") + e.what(), true};
  }
}

}  // namespace

QualityScore coherence(const TaskConfig& cfg, const LlmClient& llm, double timeout_s) {
  Json tools = Json::array();
  for (const auto& t : cfg.tools) tools.push_back(t.name);
  const Json doc = to_json(cfg);
  const std::string prompt = render(asset("prompts/coherence.txt"),
                                    {{"prompt", cfg.prompt},
                                     {"tools", tools.dump()},
                                     {"scoring", doc.value("scoring_components", Json::array()).dump(2)},
                                     {"safety", doc.value("safety_checks", Json::array()).dump(2)}});
  return ask(prompt, llm, timeout_s, 0.0, 1.0, kCoherenceFallback);
}

QualityScore clarity(const std::string& prompt, const LlmClient& llm, double timeout_s) {
  if (trim(prompt).empty()) throw std::invalid_argument("clarity needs a non-empty prompt");
  return ask(render(asset("prompts/clarity.txt"), {{"prompt", prompt}}), llm, timeout_s, 1.0, 5.0, kClarityFallback);
}

QualityReport assess_quality(const TaskConfig& cfg, const ServiceRegistry& registry, const LlmClient& llm) {
  QualityReport r;
  r.task_id = cfg.task_id;
  r.validity = validity(cfg, registry);
  r.coherence = coherence(cfg, llm);
  if (trim(cfg.prompt).empty()) r.clarity = QualityScore{1.0, "empty prompt", false};
  else r.clarity = clarity(cfg.prompt, llm);
  return r;
}

Json to_json(const QualityReport& r) {
  auto score = [](const QualityScore& s) {
    return Json{{"score", s.value}, {"reasoning", s.reasoning}, {"fallback", s.fallback}};
  };
  return Json{{"task_id", r.task_id}, {"validity", r.validity}, {"coherence", score(r.coherence)}, {"clarity", score(r.clarity)}};
}

}  // namespace clawenv
