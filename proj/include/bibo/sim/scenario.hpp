#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bibo/agent/agent.hpp"
#include "bibo/agent/path_loss.hpp"
#include "bibo/domain/entities.hpp"
#include "bibo/domain/errors.hpp"
#include "bibo/transit/skimming.hpp"

namespace bibo::sim {

struct VehicleSpec {
  VehicleId vehicle_id;
  ServiceId service_id;
  StationId station_id;
  std::vector<GeoPoint> waypoints;
  double speed_mps{8.0};
  bool loop{true};
};

struct TurnstileSpec {
  StationId station_id;
  ServiceId service_id;
  GeoPoint pos;
};

/// One planned ride. Bus legs attach the rider to a vehicle between
/// board and alight; gate legs walk the rider through an entry and an
/// exit turnstile.
struct Leg {
  enum class Type { bus, gate };
  Type type{Type::bus};
  // bus
  VehicleId vehicle_id;
  Timestamp board{0};
  Timestamp alight{0};
  // gate
  StationId entry_station;
  StationId exit_station;
  Timestamp entry{0};
  Timestamp exit{0};
};

struct RiderSpec {
  Gender gender{Gender::unspecified};
  Date birth_date;
  GeoPoint home;
  std::vector<Leg> legs;
};

struct ServiceSpec {
  TransportService service;
  transit::SkimmingConfig skimming;
};

struct ScenarioConfig {
  std::uint64_t seed{42};
  int tick_s{1};
  Timestamp start_epoch{1622505600};  // scenario day origin
  Timestamp duration_s{3600};
  double loss_probability{0.0};
  agent::ProximityConfig proximity;
  agent::PathLossModel path_loss;
  int station_interval_s{1};
  std::vector<ServiceSpec> services;
  std::vector<VehicleSpec> vehicles;
  std::vector<TurnstileSpec> turnstiles;
  std::vector<RiderSpec> riders;
};

Status validate(const ScenarioConfig& config);

std::string to_json_string(const ScenarioConfig& config);
Outcome<ScenarioConfig> scenario_from_json(const std::string& json);
Outcome<ScenarioConfig> scenario_from_file(const std::string& path);

struct StandardScenarioParams {
  int n_riders{100};
  int n_buses{10};
  int n_turnstile_lines{2};
  Timestamp duration_s{86400};
  std::uint64_t seed{42};
  double loss_probability{0.0};
  double noise_sigma_dbm{0.0};
};

/// Deterministic city-day scenario: bus loops on separated routes, one
/// entry/exit gate pair per turnstile line, riders with 1-3 rides each
/// spread across the day and across age buckets.
ScenarioConfig standard_scenario(const StandardScenarioParams& params);

}  // namespace bibo::sim
