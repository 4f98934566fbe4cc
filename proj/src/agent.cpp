#include "bibo/agent/agent.hpp"

namespace bibo::agent {

std::vector<ProtocolAction> RiderAgent::observe(const RssiSample& sample) {
  if (classify(sample, cfg_) == Range::out_of_range) return {};
  if (sample.advertisement.mode != station::StationMode::on_board) return {};

  if (phase_ == AgentPhase::idle) {
    station_id_ = sample.station_id;
    phase_ = AgentPhase::starting;
    return {StartSessionAction{sample.station_id, sample.advertisement,
                               sample.rssi_dbm, sample.at,
                               cfg_.sample_period_s}};
  }
  if (phase_ == AgentPhase::in_session && kind_ == ServiceKind::on_board &&
      sample.station_id == station_id_) {
    last_in_range_at_ = sample.at;
    if (sample.at - last_report_at_ >= cfg_.sample_period_s) {
      last_report_at_ = sample.at;
      consecutive_missed_ = 0;
      return {UpdateSessionAction{session_id_, window_counter_++,
                                  sample.rssi_dbm,
                                  sample.advertisement.location, sample.at}};
    }
  }
  // Other stations are ignored while a session is active.
  return {};
}

std::vector<ProtocolAction> RiderAgent::tick(Timestamp now) {
  if (phase_ != AgentPhase::in_session || kind_ != ServiceKind::on_board) {
    return {};
  }
  if (now - last_in_range_at_ >= cfg_.loss_timeout_s) {
    auto id = session_id_;
    phase_ = AgentPhase::idle;
    session_id_.clear();
    station_id_.clear();
    return {EndSessionAction{id, now}};
  }
  if (now - last_report_at_ >= cfg_.sample_period_s) {
    last_report_at_ = now;
    ++consecutive_missed_;
    return {MissingDataAction{session_id_, window_counter_++,
                              consecutive_missed_, now}};
  }
  return {};
}

std::vector<ProtocolAction> RiderAgent::turnstile_flow(
    const station::Advertisement& ad, double rssi_dbm, Timestamp now) {
  if (ad.mode != station::StationMode::turnstile) return {};
  if (classify(rssi_dbm, cfg_) == Range::out_of_range) return {};

  if (phase_ == AgentPhase::idle) {
    if (ad.station_id == exited_station_ &&
        now - exited_at_ < cfg_.loss_timeout_s) {
      return {};
    }
    station_id_ = ad.station_id;
    phase_ = AgentPhase::starting;
    return {StartSessionAction{ad.station_id, ad, rssi_dbm, now,
                               cfg_.sample_period_s},
            OpenRequestAction{ad.station_id, GateSide::entry, now}};
  }
  if (phase_ == AgentPhase::in_session && kind_ == ServiceKind::turnstile &&
      ad.station_id != station_id_) {
    // Exit gate: final position update, session end, then the gate.
    auto id = session_id_;
    std::vector<ProtocolAction> actions{
        UpdateSessionAction{id, window_counter_++, rssi_dbm, ad.location, now},
        EndSessionAction{id, now},
        OpenRequestAction{ad.station_id, GateSide::exit, now}};
    exited_station_ = ad.station_id;
    exited_at_ = now;
    phase_ = AgentPhase::idle;
    session_id_.clear();
    station_id_.clear();
    return actions;
  }
  return {};
}

void RiderAgent::on_session_started(SessionId session_id, ServiceKind kind,
                                    Timestamp now) {
  if (phase_ != AgentPhase::starting) return;
  phase_ = AgentPhase::in_session;
  session_id_ = std::move(session_id);
  kind_ = kind;
  last_in_range_at_ = now;
  last_report_at_ = now;
  window_counter_ = 1;  // window 0 rides in the start request
  consecutive_missed_ = 0;
}

void RiderAgent::on_start_failed() {
  if (phase_ != AgentPhase::starting) return;
  phase_ = AgentPhase::idle;
  station_id_.clear();
}

}  // namespace bibo::agent
