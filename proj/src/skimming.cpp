#include "bibo/transit/skimming.hpp"

#include <algorithm>
#include <vector>

namespace bibo::transit {

Outcome<SkimResult> skim_validate(const UserSession& session,
                                  const SkimmingConfig& config) {
  if (session.state != SessionState::ended) {
    return err(Errc::invalid_state, "session not ended");
  }
  SkimResult result;

  std::int64_t present_count = 0;
  for (const auto& e : session.beacon_log) {
    if (e.present) ++present_count;
  }
  if (present_count == 0) {
    result.reason = "no-signal";
    return result;
  }

  const Timestamp end_ts = session.end_ts.value_or(session.start_ts);
  const std::int64_t duration = end_ts - session.start_ts;

  std::int64_t total;
  if (config.count_only_reported_windows) {
    total = static_cast<std::int64_t>(session.beacon_log.size());
  } else {
    total = std::max<std::int64_t>(
        1, duration / std::max(1, session.sample_period_s));
    for (const auto& e : session.beacon_log) {
      total = std::max(total, e.window_index + 1);
    }
  }

  // Presence per window; unreported windows count as missing.
  std::vector<bool> present(static_cast<std::size_t>(total), false);
  if (config.count_only_reported_windows) {
    for (std::size_t i = 0; i < session.beacon_log.size(); ++i) {
      present[i] = session.beacon_log[i].present;
    }
  } else {
    for (const auto& e : session.beacon_log) {
      if (e.present && e.window_index >= 0 && e.window_index < total) {
        present[static_cast<std::size_t>(e.window_index)] = true;
      }
    }
  }

  result.coverage =
      static_cast<double>(present_count) / static_cast<double>(total);

  std::int64_t longest_gap = 0;
  std::int64_t run = 0;
  for (bool p : present) {
    run = p ? 0 : run + 1;
    longest_gap = std::max(longest_gap, run);
  }

  if (result.coverage < config.min_coverage) {
    result.reason = "coverage";
    return result;
  }
  if (longest_gap > config.max_gap_windows) {
    result.reason = "gap";
    return result;
  }
  if (duration < config.min_duration_s) {
    result.reason = "duration";
    return result;
  }
  result.validated = true;
  return result;
}

}  // namespace bibo::transit
