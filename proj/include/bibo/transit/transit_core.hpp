#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bibo/domain/entities.hpp"
#include "bibo/domain/errors.hpp"
#include "bibo/privacy/anonymize.hpp"
#include "bibo/privacy/envelope.hpp"
#include "bibo/storage/kv_store.hpp"
#include "bibo/transit/fare.hpp"
#include "bibo/transit/skimming.hpp"

namespace bibo::transit {

struct StartResult {
  SessionId session_id;
  ServiceId service_id;
  ServiceKind kind{ServiceKind::on_board};
  bool already_ongoing{false};
};

struct EndResult {
  UserSession session;
  SkimResult skim;
  std::optional<SessionPayment> payment;   // set when validated
  std::optional<std::string> age_range;    // of the archived record
};

/// One instance per transport service: ongoing sessions in memory only,
/// skimming on end, fare computation, and encrypted archival of the
/// generalized record. Records from different services never share a
/// store.
class TransitCore {
 public:
  TransitCore(TransportService service, SkimmingConfig skimming,
              std::shared_ptr<storage::KvStore> completed_store,
              std::shared_ptr<privacy::KeyService> keys,
              std::string master_key_id);

  const TransportService& service() const { return service_; }

  /// Opens an ongoing session. Repeated starts from the same user while
  /// a session is ongoing return the existing id.
  Outcome<StartResult> start_session(const UserId& user_id,
                                     const StationId& station_id,
                                     const GeoPoint& start_pos, Timestamp now,
                                     int sample_period_s,
                                     const BeaconLogEntry& first_entry);

  /// Appends one beacon log entry (present or reported-missing).
  Status update_session(const SessionId& session_id,
                        const BeaconLogEntry& entry);

  /// Ends, skims, prices, and archives a session. The raw beacon log is
  /// discarded with the in-memory session; only the generalized record
  /// is persisted.
  Outcome<EndResult> end_session(const SessionId& session_id, Timestamp now,
                                 const User& user);

  /// Server-side cleanup for sessions whose agent went silent: ends
  /// every ongoing session without activity for orphan_timeout_s.
  std::vector<EndResult> force_end_stale(
      Timestamp now, int orphan_timeout_s,
      const std::function<Outcome<User>(const UserId&)>& user_lookup);

  bool has_ongoing(const SessionId& session_id) const;
  Outcome<UserId> owner_of(const SessionId& session_id) const;
  std::size_t ongoing_count() const;
  std::int64_t rejected_count() const { return rejected_count_; }
  std::int64_t archived_count() const { return archived_count_; }

  /// Decrypts every archived record (system-internal use: dashboards,
  /// audits).
  Outcome<std::vector<privacy::AnonymizedSessionRecord>> decrypt_all() const;

  storage::KvStore& completed_store() { return *completed_store_; }

 private:
  Outcome<EndResult> finish_locked(UserSession session, Timestamp now,
                                   const User& user);

  TransportService service_;
  SkimmingConfig skimming_;
  std::shared_ptr<storage::KvStore> completed_store_;
  std::shared_ptr<privacy::KeyService> keys_;
  std::string master_key_id_;

  mutable std::mutex mu_;
  std::map<SessionId, UserSession> ongoing_;        // RAM only, never persisted
  std::map<SessionId, Timestamp> last_activity_;
  std::map<UserId, SessionId> ongoing_by_user_;
  std::int64_t next_session_{0};
  std::int64_t next_record_{0};
  std::int64_t rejected_count_{0};
  std::int64_t archived_count_{0};
};

}  // namespace bibo::transit
