#include "bibo/station/station.hpp"

namespace bibo::station {

Station::Station(StationConfig cfg)
    : cfg_(std::move(cfg)),
      last_fix_(cfg_.initial_fix),
      last_fix_at_(cfg_.initial_fix_at) {}

Outcome<Advertisement> Station::next_advertisement(Timestamp now) {
  if (last_emitted_at_ &&
      now < *last_emitted_at_ + cfg_.advertising_interval_s) {
    return err(Errc::scheduling, "advertising interval not elapsed");
  }
  ++seq_;
  last_emitted_at_ = now;
  Advertisement ad;
  ad.station_id = cfg_.station_id;
  ad.mode = cfg_.mode;
  ad.location = last_fix_;
  ad.seq = seq_;
  ad.emitted_at = now;
  ad.tx_power_dbm = cfg_.tx_power_dbm;
  ad.stale = (now - last_fix_at_) > cfg_.staleness_window_s;
  return ad;
}

Status Station::update_location(const GeoPoint& fix, Timestamp at) {
  if (!fix.valid()) {
    return err(Errc::invalid_input, "coordinates out of range");
  }
  if (at < last_fix_at_) {
    // Fixes are monotone; late-arriving old fixes are dropped.
    return Status{};
  }
  last_fix_ = fix;
  last_fix_at_ = at;
  return Status{};
}

Outcome<GateCommand> Station::handle_open_request(Authorization auth) {
  if (cfg_.mode != StationMode::turnstile) {
    return err(Errc::invalid_state, "not a turnstile station");
  }
  switch (auth) {
    case Authorization::granted:
      return GateCommand{GateDecision::open, "granted"};
    case Authorization::denied:
      return GateCommand{GateDecision::keep_closed, "denied"};
    default:
      return GateCommand{GateDecision::keep_closed, "fail-closed"};
  }
}

}  // namespace bibo::station
