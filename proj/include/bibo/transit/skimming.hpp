#pragma once

#include <string>

#include "bibo/domain/entities.hpp"
#include "bibo/domain/errors.hpp"

namespace bibo::transit {

/// Post-ride validation rule: enough covered windows, no excessive gap,
/// plausible duration. For turnstile services the window grid collapses
/// to the reported entries (entry and exit are the only contact points).
struct SkimmingConfig {
  double min_coverage{0.6};
  int max_gap_windows{6};
  int min_duration_s{60};
  bool count_only_reported_windows{false};
};

struct SkimResult {
  bool validated{false};
  double coverage{0.0};
  std::string reason;  // first failing rule when rejected
};

/// Decides whether an ended session corresponds to a real ride.
/// Coverage = present windows / total windows, where the total is the
/// number of sample windows elapsed between start and end (so windows
/// lost in transit still count as missing).
Outcome<SkimResult> skim_validate(const UserSession& session,
                                  const SkimmingConfig& config);

}  // namespace bibo::transit
