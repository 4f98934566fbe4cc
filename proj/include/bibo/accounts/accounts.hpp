#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bibo/domain/entities.hpp"
#include "bibo/domain/errors.hpp"
#include "bibo/storage/kv_store.hpp"

namespace bibo::accounts {

struct RouteAssemblyConfig {
  int transfer_window_s{3600};
};

struct Subscription {
  UserId user_id;
  ServiceId service_id;
  Timestamp valid_from{0};
  Timestamp valid_to{0};
};

struct DiscountPolicy {
  double transfer_discount{0.5};  // applied after the first paid session
  std::vector<Subscription> subscriptions;
};

struct RetentionConfig {
  int max_age_days{30};
};

struct SettlementReport {
  CustomerId customer_id;
  Timestamp from{0};
  Timestamp to{0};
  Money total;
  std::int64_t session_count{0};
};

struct AuthDecision {
  bool granted{false};
  std::string reason;
};

/// What route assembly needs to know about one validated, priced session.
struct SessionFacts {
  SessionId session_id;
  ServiceId service_id;
  Timestamp start_ts{0};
  Timestamp end_ts{0};
  Money amount;
};

/// A wallet charge produced by closing a route.
struct ChargeEvent {
  UserId user_id;
  RoutePayment payment;
  Timestamp at{0};
};

struct RouteRecord {
  RouteId route_id;
  UserId user_id;
  std::vector<SessionId> session_ids;
  Timestamp created_at{0};
  Timestamp closed_at{0};
  Money amount;
  bool closed{false};
};

struct AccountsConfig {
  RouteAssemblyConfig routes;
  DiscountPolicy discounts;
  Money wallet_floor{-500};
  std::string currency{"EUR"};
};

struct RegisteredUser {
  User user;
  Wallet wallet;
};

/// Shared (service-independent) side of the server: users and wallets,
/// the station registry, route assembly and payment, customer
/// settlement, and the retention sweep over the route store.
class AccountsCore {
 public:
  AccountsCore(AccountsConfig config,
               std::shared_ptr<storage::KvStore> route_store,
               std::shared_ptr<storage::KvStore> wallet_store);

  // -- users and wallets ----------------------------------------------

  /// identity_key stands in for the natural-person check ("one user per
  /// person"); reusing it is a conflict.
  Outcome<RegisteredUser> register_user(Gender gender, const Date& birth_date,
                                        const std::string& identity_key,
                                        const std::string& payment_method_ref,
                                        Timestamp now);
  Outcome<User> get_user(const UserId& user_id) const;
  Outcome<Wallet> get_wallet(const UserId& user_id) const;
  AuthDecision authorize(const UserId& user_id) const;

  // -- registry -------------------------------------------------------

  void upsert_service(const TransportService& service);
  Outcome<TransportService> get_service(const ServiceId& service_id) const;
  void map_station(const VehicleAccessIdentifier& association);
  Outcome<VehicleAccessIdentifier> resolve_station(
      const StationId& station_id) const;

  // -- routes and payments --------------------------------------------

  /// Feeds one validated session into route assembly. May close the
  /// user's previous route (charging the wallet); returns the charges.
  std::vector<ChargeEvent> on_validated_session(const UserId& user_id,
                                                const SessionFacts& facts,
                                                Timestamp now);

  /// Closes open routes whose transfer window has lapsed by now.
  std::vector<ChargeEvent> sweep_expired_routes(Timestamp now);

  /// Closes every open route regardless of window (end-of-run flush).
  std::vector<ChargeEvent> close_all_routes(Timestamp now);

  std::vector<RouteRecord> routes_of(const UserId& user_id) const;

  // -- retention and settlement ---------------------------------------

  std::size_t retention_sweep(Timestamp now, const RetentionConfig& config);
  Outcome<SettlementReport> settle_customer(const CustomerId& customer_id,
                                            Timestamp from, Timestamp to) const;

  // Conservation counters.
  Money total_debited() const;
  Money total_route_payments() const;
  Money total_settled() const;
  std::int64_t routes_closed() const;

  RoutePayment compute_route_payment(const RouteRecord& route,
                                     const std::vector<SessionFacts>& sessions,
                                     const UserId& user_id) const;

 private:
  ChargeEvent close_route_locked(const UserId& user_id, Timestamp now);
  void persist_wallet_locked(const Wallet& wallet);
  void persist_route_locked(const RouteRecord& route);
  bool subscribed_locked(const UserId& user_id, const ServiceId& service_id,
                         Timestamp at) const;

  AccountsConfig config_;
  std::shared_ptr<storage::KvStore> route_store_;
  std::shared_ptr<storage::KvStore> wallet_store_;

  mutable std::mutex mu_;
  std::map<UserId, User> users_;
  std::map<std::string, UserId> identity_index_;
  std::map<UserId, Wallet> wallets_;
  std::map<ServiceId, TransportService> services_;
  std::set<CustomerId> customers_;
  std::map<StationId, VehicleAccessIdentifier> stations_;

  struct OpenRoute {
    RouteRecord record;
    std::vector<SessionFacts> sessions;
    Timestamp last_end_ts{0};
  };
  std::map<UserId, OpenRoute> open_routes_;
  std::int64_t next_route_{0};
  std::int64_t next_user_{0};

  struct SettlementLine {
    CustomerId customer_id;
    Timestamp session_end_ts{0};
    Money net;
  };
  std::vector<SettlementLine> settlement_ledger_;

  Money total_debited_;
  Money total_route_payments_;
  std::int64_t routes_closed_{0};
};

}  // namespace bibo::accounts
