#include "bibo/sim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bibo::sim {

using nlohmann::ordered_json;

Status validate(const ScenarioConfig& config) {
  if (config.tick_s <= 0) return err(Errc::invalid_input, "tick must be > 0");
  if (config.duration_s <= 0) {
    return err(Errc::invalid_input, "duration must be > 0");
  }
  if (config.loss_probability < 0.0 || config.loss_probability > 1.0) {
    return err(Errc::invalid_input, "loss probability outside [0,1]");
  }
  if (config.proximity.sample_period_s <= 0 ||
      config.proximity.loss_timeout_s <= config.proximity.sample_period_s) {
    return err(Errc::invalid_input,
               "need loss_timeout > sample_period > 0");
  }
  std::set<ServiceId> services;
  for (const auto& s : config.services) services.insert(s.service.service_id);
  std::set<VehicleId> vehicles;
  std::set<StationId> gates;
  for (const auto& v : config.vehicles) {
    if (!services.count(v.service_id)) {
      return err(Errc::invalid_input, "vehicle on unknown service");
    }
    if (v.waypoints.empty()) {
      return err(Errc::invalid_input, "vehicle without waypoints");
    }
    vehicles.insert(v.vehicle_id);
  }
  for (const auto& t : config.turnstiles) {
    if (!services.count(t.service_id)) {
      return err(Errc::invalid_input, "turnstile on unknown service");
    }
    gates.insert(t.station_id);
  }
  for (const auto& r : config.riders) {
    for (const auto& leg : r.legs) {
      if (leg.type == Leg::Type::bus) {
        if (!vehicles.count(leg.vehicle_id)) {
          return err(Errc::invalid_input, "leg on unknown vehicle");
        }
        if (leg.alight <= leg.board) {
          return err(Errc::invalid_input, "alight before board");
        }
      } else {
        if (!gates.count(leg.entry_station) || !gates.count(leg.exit_station)) {
          return err(Errc::invalid_input, "leg through unknown gate");
        }
        if (leg.exit <= leg.entry) {
          return err(Errc::invalid_input, "exit before entry");
        }
      }
    }
  }
  return Status{};
}

namespace {

ordered_json point_json(const GeoPoint& p) {
  return ordered_json{{"lat", p.lat}, {"lon", p.lon}};
}

GeoPoint point_from(const nlohmann::json& j) {
  return {j.value("lat", 0.0), j.value("lon", 0.0)};
}

ordered_json plan_json(const FarePlan& plan) {
  if (plan.kind == FarePlan::Kind::flat) {
    return ordered_json{{"kind", "flat"}, {"price_cents", plan.price.cents}};
  }
  return ordered_json{{"kind", "distance"},
                      {"base_cents", plan.base.cents},
                      {"per_km_cents", plan.per_km.cents},
                      {"min_cents", plan.min_charge.cents},
                      {"max_cents", plan.max_charge.cents}};
}

FarePlan plan_from(const nlohmann::json& j) {
  if (j.value("kind", "flat") == "flat") {
    return FarePlan::flat(Money{j.value("price_cents", std::int64_t{0})});
  }
  return FarePlan::distance(Money{j.value("base_cents", std::int64_t{0})},
                            Money{j.value("per_km_cents", std::int64_t{0})},
                            Money{j.value("min_cents", std::int64_t{0})},
                            Money{j.value("max_cents", std::int64_t{0})});
}

}  // namespace

std::string to_json_string(const ScenarioConfig& config) {
  ordered_json j;
  j["seed"] = config.seed;
  j["tick"] = config.tick_s;
  j["start_epoch"] = config.start_epoch;
  j["duration"] = config.duration_s;
  j["loss_probability"] = config.loss_probability;
  j["rssi_threshold"] = config.proximity.rssi_threshold_dbm;
  j["sample_period"] = config.proximity.sample_period_s;
  j["loss_timeout"] = config.proximity.loss_timeout_s;
  j["path_loss"] = ordered_json{{"tx_power", config.path_loss.tx_power_dbm},
                                {"exponent", config.path_loss.exponent},
                                {"noise_sigma", config.path_loss.noise_sigma_dbm}};
  j["station_interval"] = config.station_interval_s;

  j["services"] = ordered_json::array();
  for (const auto& s : config.services) {
    j["services"].push_back(ordered_json{
        {"service_id", s.service.service_id},
        {"customer_id", s.service.customer_id},
        {"kind", to_string(s.service.kind)},
        {"fare_plan", plan_json(s.service.fare_plan)},
        {"skimming",
         ordered_json{{"min_coverage", s.skimming.min_coverage},
                      {"max_gap_windows", s.skimming.max_gap_windows},
                      {"min_duration", s.skimming.min_duration_s},
                      {"reported_windows_only",
                       s.skimming.count_only_reported_windows}}}});
  }
  j["vehicles"] = ordered_json::array();
  for (const auto& v : config.vehicles) {
    ordered_json waypoints = ordered_json::array();
    for (const auto& w : v.waypoints) waypoints.push_back(point_json(w));
    j["vehicles"].push_back(ordered_json{{"vehicle_id", v.vehicle_id},
                                         {"service_id", v.service_id},
                                         {"station_id", v.station_id},
                                         {"waypoints", waypoints},
                                         {"speed_mps", v.speed_mps},
                                         {"loop", v.loop}});
  }
  j["turnstiles"] = ordered_json::array();
  for (const auto& t : config.turnstiles) {
    j["turnstiles"].push_back(ordered_json{{"station_id", t.station_id},
                                           {"service_id", t.service_id},
                                           {"pos", point_json(t.pos)}});
  }
  j["riders"] = ordered_json::array();
  for (const auto& r : config.riders) {
    ordered_json legs = ordered_json::array();
    for (const auto& leg : r.legs) {
      if (leg.type == Leg::Type::bus) {
        legs.push_back(ordered_json{{"type", "bus"},
                                    {"vehicle_id", leg.vehicle_id},
                                    {"board", leg.board},
                                    {"alight", leg.alight}});
      } else {
        legs.push_back(ordered_json{{"type", "gate"},
                                    {"entry_station", leg.entry_station},
                                    {"exit_station", leg.exit_station},
                                    {"entry", leg.entry},
                                    {"exit", leg.exit}});
      }
    }
    j["riders"].push_back(ordered_json{{"gender", to_string(r.gender)},
                                       {"birth_date", format_date(r.birth_date)},
                                       {"home", point_json(r.home)},
                                       {"legs", legs}});
  }
  return j.dump(2);
}

Outcome<ScenarioConfig> scenario_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) return err(Errc::invalid_input, "malformed JSON");
  ScenarioConfig c;
  c.seed = j.value("seed", std::uint64_t{42});
  c.tick_s = j.value("tick", 1);
  c.start_epoch = j.value("start_epoch", Timestamp{1622505600});
  c.duration_s = j.value("duration", Timestamp{3600});
  c.loss_probability = j.value("loss_probability", 0.0);
  c.proximity.rssi_threshold_dbm = j.value("rssi_threshold", -75.0);
  c.proximity.sample_period_s = j.value("sample_period", 5);
  c.proximity.loss_timeout_s = j.value("loss_timeout", 30);
  if (j.contains("path_loss")) {
    const auto& p = j["path_loss"];
    c.path_loss.tx_power_dbm = p.value("tx_power", -59.0);
    c.path_loss.exponent = p.value("exponent", 2.0);
    c.path_loss.noise_sigma_dbm = p.value("noise_sigma", 0.0);
  }
  c.path_loss.rng_seed = c.seed;
  c.station_interval_s = j.value("station_interval", 1);

  for (const auto& s : j.value("services", nlohmann::json::array())) {
    ServiceSpec spec;
    spec.service.service_id = s.value("service_id", "");
    spec.service.customer_id = s.value("customer_id", "");
    spec.service.kind = s.value("kind", "on_board") == "turnstile"
                            ? ServiceKind::turnstile
                            : ServiceKind::on_board;
    spec.service.fare_plan = plan_from(s.value("fare_plan", nlohmann::json{}));
    const auto sk = s.value("skimming", nlohmann::json{});
    spec.skimming.min_coverage = sk.value("min_coverage", 0.6);
    spec.skimming.max_gap_windows = sk.value("max_gap_windows", 6);
    spec.skimming.min_duration_s = sk.value("min_duration", 60);
    spec.skimming.count_only_reported_windows =
        sk.value("reported_windows_only",
                 spec.service.kind == ServiceKind::turnstile);
    c.services.push_back(std::move(spec));
  }
  for (const auto& v : j.value("vehicles", nlohmann::json::array())) {
    VehicleSpec spec;
    spec.vehicle_id = v.value("vehicle_id", "");
    spec.service_id = v.value("service_id", "");
    spec.station_id = v.value("station_id", "st-" + spec.vehicle_id);
    for (const auto& w : v.value("waypoints", nlohmann::json::array())) {
      spec.waypoints.push_back(point_from(w));
    }
    spec.speed_mps = v.value("speed_mps", 8.0);
    spec.loop = v.value("loop", true);
    c.vehicles.push_back(std::move(spec));
  }
  for (const auto& t : j.value("turnstiles", nlohmann::json::array())) {
    TurnstileSpec spec;
    spec.station_id = t.value("station_id", "");
    spec.service_id = t.value("service_id", "");
    spec.pos = point_from(t.value("pos", nlohmann::json{}));
    c.turnstiles.push_back(std::move(spec));
  }
  for (const auto& r : j.value("riders", nlohmann::json::array())) {
    RiderSpec spec;
    const std::string g = r.value("gender", "unspecified");
    spec.gender = g == "female" ? Gender::female
                : g == "male"   ? Gender::male
                                : Gender::unspecified;
    auto birth = parse_date(r.value("birth_date", "1980-01-01"));
    if (!birth.ok()) return birth.error();
    spec.birth_date = birth.value();
    spec.home = point_from(r.value("home", nlohmann::json{}));
    for (const auto& l : r.value("legs", nlohmann::json::array())) {
      Leg leg;
      if (l.value("type", "bus") == "bus") {
        leg.type = Leg::Type::bus;
        leg.vehicle_id = l.value("vehicle_id", "");
        leg.board = l.value("board", Timestamp{0});
        leg.alight = l.value("alight", Timestamp{0});
      } else {
        leg.type = Leg::Type::gate;
        leg.entry_station = l.value("entry_station", "");
        leg.exit_station = l.value("exit_station", "");
        leg.entry = l.value("entry", Timestamp{0});
        leg.exit = l.value("exit", Timestamp{0});
      }
      spec.legs.push_back(std::move(leg));
    }
    c.riders.push_back(std::move(spec));
  }
  auto valid = validate(c);
  if (!valid.ok()) return valid.error();
  return c;
}

Outcome<ScenarioConfig> scenario_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return err(Errc::not_found, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json(buffer.str());
}

ScenarioConfig standard_scenario(const StandardScenarioParams& params) {
  ScenarioConfig c;
  c.seed = params.seed;
  c.duration_s = params.duration_s;
  c.loss_probability = params.loss_probability;
  c.path_loss.noise_sigma_dbm = params.noise_sigma_dbm;
  c.path_loss.rng_seed = params.seed;

  // Two bus tariffs and one flat tariff per turnstile line.
  ServiceSpec bus_a;
  bus_a.service = {"svc-bus-a", "cust-a", ServiceKind::on_board,
                   FarePlan::flat(Money{150})};
  ServiceSpec bus_b;
  bus_b.service = {"svc-bus-b", "cust-b", ServiceKind::on_board,
                   FarePlan::distance(Money{100}, Money{10}, Money{150},
                                      Money{500})};
  c.services.push_back(bus_a);
  c.services.push_back(bus_b);
  for (int j = 0; j < params.n_turnstile_lines; ++j) {
    ServiceSpec line;
    line.service = {"svc-line-" + std::to_string(j),
                    "cust-line-" + std::to_string(j), ServiceKind::turnstile,
                    FarePlan::flat(Money{200})};
    line.skimming.count_only_reported_windows = true;
    c.services.push_back(line);
  }

  // Bus loops on well-separated squares, ~4.4 km around.
  for (int i = 0; i < params.n_buses; ++i) {
    VehicleSpec v;
    v.vehicle_id = "bus-" + std::to_string(i);
    v.service_id = i % 2 == 0 ? "svc-bus-a" : "svc-bus-b";
    v.station_id = "st-" + v.vehicle_id;
    const double lat = 44.0 + 0.05 * i;
    const double lon = 11.0;
    v.waypoints = {{lat, lon},
                   {lat + 0.01, lon},
                   {lat + 0.01, lon + 0.01},
                   {lat, lon + 0.01}};
    v.speed_mps = 8.0;
    v.loop = true;
    c.vehicles.push_back(std::move(v));
  }

  // One entry and one exit gate per line, ~790 m apart.
  for (int j = 0; j < params.n_turnstile_lines; ++j) {
    const double lat = 46.0 + 0.1 * j;
    c.turnstiles.push_back(TurnstileSpec{"gate-in-" + std::to_string(j),
                                         "svc-line-" + std::to_string(j),
                                         {lat, 11.0}});
    c.turnstiles.push_back(TurnstileSpec{"gate-out-" + std::to_string(j),
                                         "svc-line-" + std::to_string(j),
                                         {lat, 11.01}});
  }

  // Riders cover every age bucket; 1-3 rides per day. Legs 1800 s apart
  // chain into one route; 7200 s gaps open a new route.
  static const int ages[] = {10, 20, 30, 42, 55, 70, 85};
  static const Gender genders[] = {Gender::female, Gender::male,
                                   Gender::unspecified};
  const Date day = date_of(c.start_epoch);
  for (int i = 0; i < params.n_riders; ++i) {
    RiderSpec r;
    r.gender = genders[i % 3];
    const int age = ages[i % 7];
    r.birth_date = Date{day.year - age, 5, 1};
    r.home = {43.0, 10.0 + 0.001 * i};

    const int n_legs = 1 + i % 3;
    Timestamp t = 21600 + (static_cast<Timestamp>(i) * 523) % 36000;
    for (int k = 0; k < n_legs; ++k) {
      Leg leg;
      if ((i + k) % 3 == 0 && params.n_turnstile_lines > 0) {
        const int line = (i + k) % params.n_turnstile_lines;
        leg.type = Leg::Type::gate;
        leg.entry_station = "gate-in-" + std::to_string(line);
        leg.exit_station = "gate-out-" + std::to_string(line);
        leg.entry = t;
        leg.exit = t + 600;
      } else {
        leg.type = Leg::Type::bus;
        leg.vehicle_id = "bus-" + std::to_string((i + k) % params.n_buses);
        leg.board = t;
        leg.alight = t + 600;
      }
      r.legs.push_back(std::move(leg));
      t += 600 + (k == 0 ? 1800 : 7200);
    }
    c.riders.push_back(std::move(r));
  }
  return c;
}

}  // namespace bibo::sim
