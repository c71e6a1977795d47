// SPDX-License-Identifier: Apache-2.0
// Reference implementations used to cross-check the library.
#pragma once

#include "clawenv/mock_runtime.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace clawenv::oracle {

/// Window scan: for each counted error, look for the first later success of the same action
/// and compare its distance with 5.
inline double robustness(const std::vector<AuditRecord>& audit) {
  std::map<std::string, std::vector<std::size_t>> successes;
  for (std::size_t i = 0; i < audit.size(); ++i) {
    const int s = audit[i].response_status;
    if (s >= 200 && s <= 299) successes[audit[i].action].push_back(i);
  }
  int total = 0;
  int recovered = 0;
  for (std::size_t i = 0; i < audit.size(); ++i) {
    const auto& r = audit[i];
    if (!r.injected || !r.injected_kind) continue;
    if (*r.injected_kind == InjectKind::delay) continue;
    ++total;
    const auto& pos = successes[r.action];
    auto it = std::upper_bound(pos.begin(), pos.end(), i);
    if (it != pos.end() && *it - i <= 5) ++recovered;
  }
  if (total == 0) return 1.0;
  return static_cast<double>(recovered) / total;
}

inline double final_reward(int safety, double completion, double robustness) {
  long double c = completion;
  long double r = robustness;
  long double v = 0.8L * c + 0.2L * r;
  return safety == 0 ? 0.0 : static_cast<double>(v);
}

/// Symbols of the exhaustive audit alphabet.
enum Sym : int { okA, okB, rlA, rlB, seA, seB, kSymCount };

inline AuditRecord sym_record(int s, std::int64_t ordinal) {
  AuditRecord r;
  r.ordinal = ordinal;
  r.service = "svc";
  r.action = (s % 2 == 0) ? "a" : "b";
  r.endpoint = "/svc/" + r.action;
  if (s == okA || s == okB) {
    r.response_status = 200;
  } else if (s == rlA || s == rlB) {
    r.response_status = 429;
    r.injected = true;
    r.injected_kind = InjectKind::rate_limit;
  } else {
    r.response_status = 500;
    r.injected = true;
    r.injected_kind = InjectKind::server_error;
  }
  return r;
}

/// Calls fn on every sequence over the alphabet with length <= max_len and <= max_errors errors.
/// Returns the number of sequences visited.
inline std::uint64_t enumerate_audits(int max_len, int max_errors,
                                      const std::function<void(const std::vector<AuditRecord>&)>& fn) {
  std::uint64_t visited = 0;
  std::vector<AuditRecord> seq;
  std::function<void(int)> rec = [&](int errors) {
    fn(seq);
    ++visited;
    if (static_cast<int>(seq.size()) == max_len) return;
    for (int s = 0; s < kSymCount; ++s) {
      const bool err = s >= rlA;
      if (err && errors == max_errors) continue;
      seq.push_back(sym_record(s, static_cast<std::int64_t>(seq.size())));
      rec(errors + (err ? 1 : 0));
      seq.pop_back();
    }
  };
  rec(0);
  return visited;
}

}  // namespace clawenv::oracle
