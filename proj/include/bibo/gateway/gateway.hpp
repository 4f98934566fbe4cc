#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibo/accounts/accounts.hpp"
#include "bibo/privacy/envelope.hpp"
#include "bibo/transit/transit_core.hpp"

namespace bibo::gateway {

/// The simulated transport's request unit. Virtual time travels with
/// the request; core logic never reads the wall clock.
struct ApiRequest {
  std::string method;
  std::string path;
  std::string token;
  Timestamp now{0};
  nlohmann::json body;
};

struct ApiResponse {
  int status{0};
  nlohmann::json body;
};

struct ServiceSetup {
  TransportService service;
  transit::SkimmingConfig skimming;
};

struct GatewayConfig {
  accounts::AccountsConfig accounts;
  std::vector<ServiceSetup> services;
  std::int64_t k_threshold{5};
  int orphan_timeout_s{150};  // 5x the default agent loss timeout
  std::string admin_token{"admin"};
};

struct ProtocolCounters {
  std::int64_t start{0};
  std::int64_t update{0};
  std::int64_t missing{0};
  std::int64_t end{0};
  std::int64_t authorize{0};
};

struct GatewayMetrics {
  std::int64_t sessions_started{0};
  std::int64_t sessions_validated{0};
  std::int64_t sessions_rejected{0};
  std::int64_t routes_closed{0};
  std::int64_t wallet_charges{0};
  std::int64_t total_charged_cents{0};
  std::map<std::string, std::int64_t> rides_by_age_range;
  ProtocolCounters messages;
};

/// The one reachable surface of the server side. Everything else —
/// accounts, per-service transit cores, the privacy layer — sits behind
/// route_request.
class Gateway {
 public:
  Gateway(GatewayConfig config,
          std::shared_ptr<privacy::KeyService> keys,
          std::shared_ptr<storage::KvStore> route_store,
          std::shared_ptr<storage::KvStore> wallet_store,
          const std::map<ServiceId, std::shared_ptr<storage::KvStore>>&
              completed_stores);

  ApiResponse route_request(const ApiRequest& req);

  /// Registers a station association and returns the station's access
  /// token for turnstile authorization calls.
  std::string provision_station(const VehicleAccessIdentifier& association);

  const GatewayMetrics& metrics() const { return metrics_; }
  accounts::AccountsCore& accounts() { return accounts_; }
  transit::TransitCore* transit_core(const ServiceId& id);

 private:
  ApiResponse handle_register(const ApiRequest& req);
  ApiResponse handle_start_session(const ApiRequest& req);
  ApiResponse handle_update_session(const ApiRequest& req,
                                    const SessionId& session_id);
  ApiResponse handle_end_session(const ApiRequest& req,
                                 const SessionId& session_id);
  ApiResponse handle_turnstile_authorize(const ApiRequest& req);
  ApiResponse handle_wallet(const ApiRequest& req);
  ApiResponse handle_routes(const ApiRequest& req);
  ApiResponse handle_stats(const ApiRequest& req, const ServiceId& service_id);
  ApiResponse handle_settlement(const ApiRequest& req,
                                const CustomerId& customer_id);
  ApiResponse handle_admin(const ApiRequest& req, const std::string& verb);

  Outcome<UserId> authenticate(const std::string& token) const;
  void record_charges(const std::vector<accounts::ChargeEvent>& charges);

  GatewayConfig config_;
  std::shared_ptr<privacy::KeyService> keys_;
  accounts::AccountsCore accounts_;
  std::map<ServiceId, std::unique_ptr<transit::TransitCore>> cores_;
  std::map<std::string, UserId> tokens_;
  std::map<std::string, StationId> station_tokens_;
  std::map<SessionId, ServiceId> session_service_;
  GatewayMetrics metrics_;
};

}  // namespace bibo::gateway
