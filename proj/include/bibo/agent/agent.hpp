#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "bibo/agent/path_loss.hpp"
#include "bibo/domain/entities.hpp"
#include "bibo/station/station.hpp"

namespace bibo::agent {

struct ProximityConfig {
  double rssi_threshold_dbm{-75.0};
  int sample_period_s{5};
  int loss_timeout_s{30};  // must exceed several sample periods
};

struct RssiSample {
  StationId station_id;
  double rssi_dbm{0.0};
  Timestamp at{0};
  station::Advertisement advertisement;
};

enum class Range { in_range, out_of_range };

inline Range classify(double rssi_dbm, const ProximityConfig& cfg) {
  return rssi_dbm >= cfg.rssi_threshold_dbm ? Range::in_range
                                            : Range::out_of_range;
}

inline Range classify(const RssiSample& s, const ProximityConfig& cfg) {
  return classify(s.rssi_dbm, cfg);
}

// Protocol actions the agent emits. These are the only way session
// traffic originates; nothing models a rider gesture after registration.

struct StartSessionAction {
  StationId station_id;
  station::Advertisement advertisement;
  double rssi_dbm{0.0};
  Timestamp at{0};
  int sample_period_s{5};
};

struct UpdateSessionAction {
  SessionId session_id;
  std::int64_t window_index{0};
  double rssi_dbm{0.0};
  GeoPoint location;
  Timestamp at{0};
};

/// One reported missing window, with the run length of consecutive
/// misses so the server sees the gap structure.
struct MissingDataAction {
  SessionId session_id;
  std::int64_t window_index{0};
  int consecutive_missed{1};
  Timestamp at{0};
};

struct EndSessionAction {
  SessionId session_id;
  Timestamp at{0};
};

enum class GateSide { entry, exit };

struct OpenRequestAction {
  StationId station_id;
  GateSide side{GateSide::entry};
  Timestamp at{0};
};

using ProtocolAction =
    std::variant<StartSessionAction, UpdateSessionAction, MissingDataAction,
                 EndSessionAction, OpenRequestAction>;

enum class AgentPhase { idle, starting, in_session };

/// Background mobile application emulation for one rider: a sequential
/// state machine driven solely by advertisements and the clock.
class RiderAgent {
 public:
  RiderAgent(UserId user_id, ProximityConfig cfg)
      : user_id_(std::move(user_id)), cfg_(cfg) {}

  const UserId& user_id() const { return user_id_; }
  const ProximityConfig& config() const { return cfg_; }
  AgentPhase phase() const { return phase_; }
  SessionId session_id() const { return session_id_; }
  const StationId& current_station() const { return station_id_; }
  ServiceKind session_kind() const { return kind_; }

  /// On-board branch: start on first in-range contact, report periodic
  /// updates while the same station stays in range.
  std::vector<ProtocolAction> observe(const RssiSample& sample);

  /// Clock-driven rules: missing-data reports per elapsed window,
  /// session end after loss_timeout without contact. On-board only;
  /// turnstile sessions end at the exit gate.
  std::vector<ProtocolAction> tick(Timestamp now);

  /// Turnstile branch of the protocol, for advertisements from
  /// turnstile-mode stations in range.
  std::vector<ProtocolAction> turnstile_flow(
      const station::Advertisement& ad, double rssi_dbm, Timestamp now);

  /// Server acknowledged the start request.
  void on_session_started(SessionId session_id, ServiceKind kind,
                          Timestamp now);
  /// Start request lost or refused.
  void on_start_failed();

 private:
  UserId user_id_;
  ProximityConfig cfg_;

  AgentPhase phase_{AgentPhase::idle};
  SessionId session_id_;
  StationId station_id_;  // station that started the session
  ServiceKind kind_{ServiceKind::on_board};
  Timestamp last_in_range_at_{0};
  Timestamp last_report_at_{0};
  std::int64_t window_counter_{0};
  int consecutive_missed_{0};

  // Debounce: the gate the rider just walked out through stays in range
  // for a moment and must not open a fresh session.
  StationId exited_station_;
  Timestamp exited_at_{0};
};

}  // namespace bibo::agent
