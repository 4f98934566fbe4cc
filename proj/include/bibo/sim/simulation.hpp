#pragma once

#include <map>
#include <memory>
#include <string>

#include "bibo/gateway/gateway.hpp"
#include "bibo/sim/scenario.hpp"

namespace bibo::sim {

struct SimMetrics {
  std::int64_t sessions_started{0};
  std::int64_t sessions_validated{0};
  std::int64_t sessions_rejected{0};
  std::int64_t routes_closed{0};
  std::int64_t wallet_charges{0};
  std::int64_t total_charged_cents{0};
  std::string currency{"EUR"};
  std::map<std::string, std::int64_t> rides_by_age_range;
  gateway::ProtocolCounters messages;
  std::int64_t messages_lost{0};
  std::int64_t gates_opened{0};

  /// Canonical JSON rendering; byte-identical for identical runs.
  std::string to_json_string() const;
};

/// Stores and key service shared between a run and later CLI commands
/// (audits, exports, retention) on the same state directory.
struct StoreBundle {
  std::shared_ptr<privacy::KeyService> keys;
  std::shared_ptr<storage::KvStore> route_store;
  std::shared_ptr<storage::KvStore> wallet_store;
  std::map<ServiceId, std::shared_ptr<storage::KvStore>> completed_stores;
};

StoreBundle memory_stores(const ScenarioConfig& config);
StoreBundle dir_stores(const ScenarioConfig& config, const std::string& dir);

/// Discrete-event run of a scenario: virtual clock, vehicles along
/// waypoints, path-loss RSSI into agents, protocol messages through the
/// gateway. Metrics are a pure function of the config.
class Simulation {
 public:
  Simulation(ScenarioConfig config, StoreBundle stores);

  SimMetrics run();

  gateway::Gateway& gw() { return *gateway_; }

 private:
  ScenarioConfig config_;
  StoreBundle stores_;
  std::unique_ptr<gateway::Gateway> gateway_;
};

Outcome<SimMetrics> run_scenario(const ScenarioConfig& config);
Outcome<SimMetrics> run_scenario(const ScenarioConfig& config,
                                 StoreBundle stores);

}  // namespace bibo::sim
