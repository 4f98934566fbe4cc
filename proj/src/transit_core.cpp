#include "bibo/transit/transit_core.hpp"

#include <cstdio>

namespace bibo::transit {

TransitCore::TransitCore(TransportService service, SkimmingConfig skimming,
                         std::shared_ptr<storage::KvStore> completed_store,
                         std::shared_ptr<privacy::KeyService> keys,
                         std::string master_key_id)
    : service_(std::move(service)),
      skimming_(skimming),
      completed_store_(std::move(completed_store)),
      keys_(std::move(keys)),
      master_key_id_(std::move(master_key_id)) {
  keys_->ensure_master_key(master_key_id_);
}

Outcome<StartResult> TransitCore::start_session(
    const UserId& user_id, const StationId& station_id,
    const GeoPoint& start_pos, Timestamp now, int sample_period_s,
    const BeaconLogEntry& first_entry) {
  std::lock_guard<std::mutex> lock(mu_);

  if (auto it = ongoing_by_user_.find(user_id); it != ongoing_by_user_.end()) {
    return StartResult{it->second, service_.service_id, service_.kind, true};
  }

  char buf[64];
  std::snprintf(buf, sizeof(buf), "s-%s-%06lld", service_.service_id.c_str(),
                static_cast<long long>(++next_session_));
  UserSession session;
  session.session_id = buf;
  session.user_id = user_id;
  session.service_id = service_.service_id;
  session.state = SessionState::ongoing;
  session.start_pos = start_pos;
  session.start_ts = now;
  session.sample_period_s = sample_period_s;
  session.beacon_log.push_back(first_entry);
  (void)station_id;  // resolution happened upstream via the registry

  ongoing_by_user_[user_id] = session.session_id;
  last_activity_[session.session_id] = now;
  SessionId id = session.session_id;
  ongoing_.emplace(id, std::move(session));
  return StartResult{id, service_.service_id, service_.kind, false};
}

Status TransitCore::update_session(const SessionId& session_id,
                                   const BeaconLogEntry& entry) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = ongoing_.find(session_id);
  if (it == ongoing_.end()) {
    return err(Errc::not_found, "no ongoing session: " + session_id);
  }
  it->second.beacon_log.push_back(entry);
  last_activity_[session_id] = entry.at;
  return Status{};
}

Outcome<EndResult> TransitCore::end_session(const SessionId& session_id,
                                            Timestamp now, const User& user) {
  std::unique_lock<std::mutex> lock(mu_);
  auto it = ongoing_.find(session_id);
  if (it == ongoing_.end()) {
    return err(Errc::not_found, "no ongoing session: " + session_id);
  }
  UserSession session = std::move(it->second);
  ongoing_.erase(it);
  ongoing_by_user_.erase(session.user_id);
  last_activity_.erase(session_id);
  return finish_locked(std::move(session), now, user);
}

Outcome<EndResult> TransitCore::finish_locked(UserSession session,
                                              Timestamp now,
                                              const User& user) {
  session.state = SessionState::ended;
  session.end_ts = now;
  // End position: location of the last present entry, falling back to
  // the start position.
  session.end_pos = session.start_pos;
  for (auto it = session.beacon_log.rbegin(); it != session.beacon_log.rend();
       ++it) {
    if (it->present) {
      session.end_pos = it->location;
      break;
    }
  }

  EndResult result;
  auto skim = skim_validate(session, skimming_);
  if (!skim.ok()) return skim.error();
  result.skim = skim.value();

  if (!result.skim.validated) {
    session.state = SessionState::rejected;
    ++rejected_count_;
    result.session = std::move(session);
    return result;
  }

  session.state = SessionState::validated;
  auto payment = session_fare(service_.fare_plan, session);
  if (!payment.ok()) return payment.error();
  result.payment = payment.value();

  auto record = privacy::generalize(user, session, now);
  if (!record.ok()) return record.error();
  result.age_range = record.value().age_range;

  const std::string json = privacy::to_json(record.value());
  auto sealed = keys_->encrypt(json, master_key_id_);
  if (!sealed.ok()) return sealed.error();
  char key[64];
  std::snprintf(key, sizeof(key), "rec-%s-%08lld", service_.service_id.c_str(),
                static_cast<long long>(++next_record_));
  completed_store_->put(key, privacy::serialize(sealed.value()));
  ++archived_count_;

  result.session = std::move(session);
  return result;
}

std::vector<EndResult> TransitCore::force_end_stale(
    Timestamp now, int orphan_timeout_s,
    const std::function<Outcome<User>(const UserId&)>& user_lookup) {
  std::vector<SessionId> stale;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [id, at] : last_activity_) {
      if (now - at >= orphan_timeout_s) stale.push_back(id);
    }
  }
  std::vector<EndResult> results;
  for (const auto& id : stale) {
    UserId uid;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = ongoing_.find(id);
      if (it == ongoing_.end()) continue;
      uid = it->second.user_id;
    }
    auto user = user_lookup(uid);
    if (!user.ok()) continue;
    auto ended = end_session(id, now, user.value());
    if (ended.ok()) results.push_back(std::move(ended.value()));
  }
  return results;
}

bool TransitCore::has_ongoing(const SessionId& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return ongoing_.count(session_id) > 0;
}

Outcome<UserId> TransitCore::owner_of(const SessionId& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = ongoing_.find(session_id);
  if (it == ongoing_.end()) {
    return err(Errc::not_found, "no ongoing session: " + session_id);
  }
  return it->second.user_id;
}

std::size_t TransitCore::ongoing_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return ongoing_.size();
}

Outcome<std::vector<privacy::AnonymizedSessionRecord>>
TransitCore::decrypt_all() const {
  std::vector<privacy::AnonymizedSessionRecord> out;
  for (const auto& key : completed_store_->keys()) {
    auto raw = completed_store_->get(key);
    if (!raw.ok()) continue;
    auto envelope = privacy::deserialize(raw.value());
    if (!envelope.ok()) return envelope.error();
    auto plain = keys_->decrypt(envelope.value());
    if (!plain.ok()) return plain.error();
    auto rec = privacy::record_from_json(
        std::string(plain.value().begin(), plain.value().end()));
    if (!rec.ok()) return rec.error();
    out.push_back(std::move(rec.value()));
  }
  return out;
}

}  // namespace bibo::transit
