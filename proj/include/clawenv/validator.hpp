// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clawenv/llm_client.hpp"
#include "clawenv/service_registry.hpp"
#include "clawenv/task_model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace clawenv {

struct Issue {
  int check_id = 0;  // 1..12 for structural checks, 0 for service-spec issues
  std::string severity = "error";
  std::string message;
  std::string path;

  bool operator==(const Issue&) const = default;
};

Json to_json(const Issue& issue);

/// The twelve structural checks, all run, issues reported in check order:
///  1 required fields        5 llm_judge cap by task kind    9 routes / canonical actions
///  2 >= 3 components        6 >= 1 known safety check       10 multi-service tool spread
///  3 weight sum / range     7 safety tool references        11 forbidden-yet-required actions
///  4 check types + fields   8 services known to registry    12 /workspace/ refs have files
std::vector<Issue> validate_structure(const TaskConfig& cfg, const ServiceRegistry& registry);

struct CoverageReport {
  std::vector<std::pair<IntentAtom, std::string>> covered;  // atom, evidence locator
  std::vector<IntentAtom> uncovered;

  bool complete() const { return uncovered.empty(); }
};

CoverageReport verify_coverage(const TaskConfig& cfg, const std::vector<IntentAtom>& atoms);

struct FeasibilityVerdict {
  bool feasible = true;
  std::string reasoning;
  bool fallback = false;
};

inline constexpr std::string_view kJudgeUnavailable = "judge unavailable";

/// One provider call. Provider failure (after retries) or an unusable answer yields
/// feasible=true with reasoning "judge unavailable".
FeasibilityVerdict check_feasibility(const TaskConfig& cfg, const LlmClient& llm, double timeout_s = 30.0);

/// POST-only, /{service}/{resource} paths, 4..7 endpoints, unique name, fixture_schema present.
std::vector<Issue> validate_service_spec(const ServiceSpec& spec, const ServiceRegistry& registry);

}  // namespace clawenv
