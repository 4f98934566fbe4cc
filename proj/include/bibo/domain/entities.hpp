#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "bibo/domain/calendar.hpp"
#include "bibo/domain/types.hpp"

namespace bibo {

struct User {
  UserId user_id;
  Gender gender{Gender::unspecified};
  Date birth_date;
  Timestamp registered_at{0};
};

/// Pricing rules of one transport service. flat charges a constant per
/// session; distance charges base + per_km * trip length, clamped to
/// [min_charge, max_charge].
struct FarePlan {
  enum class Kind { flat, distance };
  Kind kind{Kind::flat};
  Money price{0};       // flat
  Money base{0};        // distance
  Money per_km{0};      // distance
  Money min_charge{0};  // distance
  Money max_charge{0};  // distance

  static FarePlan flat(Money price) {
    FarePlan p;
    p.kind = Kind::flat;
    p.price = price;
    return p;
  }
  static FarePlan distance(Money base, Money per_km, Money min_charge,
                           Money max_charge) {
    FarePlan p;
    p.kind = Kind::distance;
    p.base = base;
    p.per_km = per_km;
    p.min_charge = min_charge;
    p.max_charge = max_charge;
    return p;
  }
};

struct TransportService {
  ServiceId service_id;
  CustomerId customer_id;
  ServiceKind kind{ServiceKind::on_board};
  FarePlan fare_plan;
};

enum class SessionState { ongoing, ended, validated, rejected };

inline const char* to_string(SessionState s) {
  switch (s) {
    case SessionState::ongoing: return "ongoing";
    case SessionState::ended: return "ended";
    case SessionState::validated: return "validated";
    default: return "rejected";
  }
}

/// Legal edges: ongoing -> ended -> (validated | rejected).
inline bool session_transition_allowed(SessionState from, SessionState to) {
  if (from == SessionState::ongoing && to == SessionState::ended) return true;
  if (from == SessionState::ended &&
      (to == SessionState::validated || to == SessionState::rejected)) {
    return true;
  }
  return false;
}

/// One sampling window as recorded server-side. present=false entries
/// are windows the agent reported as missing.
struct BeaconLogEntry {
  std::int64_t window_index{0};
  bool present{false};
  double rssi_dbm{0.0};    // meaningful when present
  GeoPoint location;       // meaningful when present
  Timestamp at{0};
};

struct UserSession {
  SessionId session_id;
  UserId user_id;
  ServiceId service_id;
  SessionState state{SessionState::ongoing};
  GeoPoint start_pos;
  std::optional<GeoPoint> end_pos;
  Timestamp start_ts{0};
  std::optional<Timestamp> end_ts;
  int sample_period_s{5};  // echoed from the start request
  std::vector<BeaconLogEntry> beacon_log;
};

struct UserRoute {
  RouteId route_id;
  UserId user_id;
  std::vector<SessionId> session_ids;
  Timestamp created_at{0};
};

struct LedgerEntry {
  Timestamp at{0};
  Money delta;
  std::string reference;
};

struct Wallet {
  WalletId wallet_id;
  UserId user_id;
  Money balance{0};
  Money floor{-500};  // minimum permitted balance
  bool blocked{false};
  std::vector<LedgerEntry> ledger;

  /// Appends a ledger entry and updates the balance. The two are never
  /// mutated independently.
  void apply(Timestamp at, Money delta, std::string reference) {
    balance += delta;
    ledger.push_back(LedgerEntry{at, delta, std::move(reference)});
  }

  bool ledger_consistent() const {
    Money sum{0, balance.currency};
    for (const auto& e : ledger) sum += e.delta;
    return sum == balance;
  }
};

struct SessionPayment {
  SessionId session_id;
  Money amount;
  FarePlan plan_snapshot;
};

struct RoutePaymentLine {
  SessionId session_id;
  Money gross;
  Money discount;
};

struct RoutePayment {
  RouteId route_id;
  Money amount;
  std::vector<RoutePaymentLine> breakdown;
};

/// Registry association station -> (vehicle, service). Reallocating a
/// station means updating this record only.
struct VehicleAccessIdentifier {
  StationId station_id;
  VehicleId vehicle_id;
  ServiceId service_id;
};

}  // namespace bibo
