// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/llm_client.hpp"
#include "clawenv/service_registry.hpp"
#include "clawenv/task_model.hpp"
#include "clawenv/validator.hpp"

#include <string>
#include <vector>

namespace clawenv {

struct QualityScore {
  double value = 0.0;
  std::string reasoning;
  bool fallback = false;
};

inline constexpr double kCoherenceFallback = 0.5;
inline constexpr double kClarityFallback = 3.0;

/// 1 iff the structural checks on weights, check types, services and routes (3, 4, 8, 9) pass.
int validity(const TaskConfig& cfg, const ServiceRegistry& registry);

/// Judge score in [0,1]; 0.5 with fallback set when the judge fails.
QualityScore coherence(const TaskConfig& cfg, const LlmClient& llm, double timeout_s = 30.0);

/// Judge score in [1,5]; 3.0 with fallback set when the judge fails.
/// Throws std::invalid_argument on an empty prompt.
QualityScore clarity(const std::string& prompt, const LlmClient& llm, double timeout_s = 30.0);

struct QualityReport {
  std::string task_id;
  int validity = 0;
  QualityScore coherence;
  QualityScore clarity;
};

QualityReport assess_quality(const TaskConfig& cfg, const ServiceRegistry& registry, const LlmClient& llm);
Json to_json(const QualityReport& r);

}  // namespace clawenv
