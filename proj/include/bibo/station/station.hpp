#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bibo/domain/entities.hpp"
#include "bibo/domain/errors.hpp"

namespace bibo::station {

enum class StationMode { on_board, turnstile };

inline const char* to_string(StationMode m) {
  return m == StationMode::on_board ? "on_board" : "turnstile";
}

/// What a station broadcasts each advertising interval. Immutable once
/// emitted. The mode flag lets a listening agent pick the right protocol
/// branch without a registry lookup.
struct Advertisement {
  StationId station_id;
  StationMode mode{StationMode::on_board};
  GeoPoint location;
  std::uint64_t seq{0};
  Timestamp emitted_at{0};
  double tx_power_dbm{-59.0};
  bool stale{false};  // no GPS fix within the staleness window
};

enum class GateDecision { open, keep_closed };

struct GateCommand {
  GateDecision decision{GateDecision::keep_closed};
  std::string reason;
};

enum class Authorization { granted, denied, unreachable };

struct StationConfig {
  StationId station_id;
  StationMode mode{StationMode::on_board};
  int advertising_interval_s{1};
  double tx_power_dbm{-59.0};
  int staleness_window_s{60};
  GeoPoint initial_fix;
  Timestamp initial_fix_at{0};
};

/// Single-threaded emulation of one station device. Produces the
/// advertisement stream and, for turnstiles, maps server authorization
/// onto gate commands (fail-closed on anything but an explicit grant).
class Station {
 public:
  explicit Station(StationConfig cfg);

  const StationId& id() const { return cfg_.station_id; }
  StationMode mode() const { return cfg_.mode; }
  const GeoPoint& last_fix() const { return last_fix_; }
  Timestamp last_fix_at() const { return last_fix_at_; }
  std::uint64_t seq() const { return seq_; }
  int advertising_interval_s() const { return cfg_.advertising_interval_s; }

  /// Emits the next advertisement. Calling before one advertising
  /// interval has elapsed since the previous emission is a scheduling
  /// error.
  Outcome<Advertisement> next_advertisement(Timestamp now);

  /// GPS fix update. Out-of-range coordinates and fixes older than the
  /// current one are rejected without touching state.
  Status update_location(const GeoPoint& fix, Timestamp at);

  /// Turnstile-only: decide the gate from a server authorization.
  Outcome<GateCommand> handle_open_request(Authorization auth);

 private:
  StationConfig cfg_;
  GeoPoint last_fix_;
  Timestamp last_fix_at_{0};
  std::uint64_t seq_{0};
  std::optional<Timestamp> last_emitted_at_;
};

}  // namespace bibo::station
