#include "bibo/sim/simulation.hpp"

#include <algorithm>
#include <random>

#include "bibo/domain/geo.hpp"
#include "bibo/station/station.hpp"

namespace bibo::sim {

using gateway::ApiRequest;
using gateway::ApiResponse;

namespace {

constexpr Timestamp kGateDwellS = 10;
constexpr Timestamp kAdminSweepPeriodS = 300;

struct VehicleRt {
  VehicleSpec spec;
  station::Station station;
  std::vector<double> cum_m;  // cumulative path length per waypoint
  double total_m{0.0};

  explicit VehicleRt(const VehicleSpec& s, Timestamp t0)
      : spec(s),
        station(station::StationConfig{s.station_id,
                                       station::StationMode::on_board, 1,
                                       -59.0, 60, s.waypoints.front(), t0}) {
    cum_m.push_back(0.0);
    const auto& w = spec.waypoints;
    for (std::size_t i = 1; i < w.size(); ++i) {
      cum_m.push_back(cum_m.back() + haversine_distance_m(w[i - 1], w[i]));
    }
    if (spec.loop && w.size() > 1) {
      total_m = cum_m.back() + haversine_distance_m(w.back(), w.front());
    } else {
      total_m = cum_m.back();
    }
  }

  GeoPoint position(Timestamp t_rel) const {
    const auto& w = spec.waypoints;
    if (w.size() == 1 || total_m <= 0.0) return w.front();
    double s = spec.speed_mps * static_cast<double>(t_rel);
    if (spec.loop) {
      s = std::fmod(s, total_m);
    } else {
      s = std::min(s, total_m);
    }
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      const double seg = cum_m[i + 1] - cum_m[i];
      if (s <= cum_m[i + 1] && seg > 0.0) {
        const double f = (s - cum_m[i]) / seg;
        return {w[i].lat + f * (w[i + 1].lat - w[i].lat),
                w[i].lon + f * (w[i + 1].lon - w[i].lon)};
      }
    }
    // Closing segment of a loop.
    const double seg = total_m - cum_m.back();
    const double f = seg > 0.0 ? (s - cum_m.back()) / seg : 0.0;
    return {w.back().lat + f * (w.front().lat - w.back().lat),
            w.back().lon + f * (w.front().lon - w.back().lon)};
  }
};

struct GateRt {
  TurnstileSpec spec;
  station::Station station;

  explicit GateRt(const TurnstileSpec& s, Timestamp t0)
      : spec(s),
        station(station::StationConfig{s.station_id,
                                       station::StationMode::turnstile, 1,
                                       -59.0, 60, s.pos, t0}) {}
};

struct RiderRt {
  RiderSpec spec;
  UserId user_id;
  std::string token;
  agent::RiderAgent agent;

  RiderRt(const RiderSpec& s, const agent::ProximityConfig& cfg)
      : spec(s), agent("", cfg) {}
};

}  // namespace

std::string SimMetrics::to_json_string() const {
  nlohmann::ordered_json j;
  j["sessions_started"] = sessions_started;
  j["sessions_validated"] = sessions_validated;
  j["sessions_rejected"] = sessions_rejected;
  j["routes_closed"] = routes_closed;
  j["wallet_charges"] = wallet_charges;
  j["total_charged_cents"] = total_charged_cents;
  j["currency"] = currency;
  nlohmann::ordered_json by_age;
  for (const auto& [range, count] : rides_by_age_range) by_age[range] = count;
  j["rides_by_age_range"] = by_age;
  j["messages"] = nlohmann::ordered_json{{"start", messages.start},
                                         {"update", messages.update},
                                         {"missing", messages.missing},
                                         {"end", messages.end},
                                         {"authorize", messages.authorize}};
  j["messages_lost"] = messages_lost;
  j["gates_opened"] = gates_opened;
  return j.dump(2);
}

StoreBundle memory_stores(const ScenarioConfig& config) {
  StoreBundle b;
  b.keys = std::make_shared<privacy::KeyService>();
  b.route_store = std::make_shared<storage::MemKvStore>();
  b.wallet_store = std::make_shared<storage::MemKvStore>();
  for (const auto& s : config.services) {
    b.completed_stores[s.service.service_id] =
        std::make_shared<storage::MemKvStore>();
  }
  return b;
}

StoreBundle dir_stores(const ScenarioConfig& config, const std::string& dir) {
  StoreBundle b;
  b.keys = std::make_shared<privacy::KeyService>();
  // Reopenable master keys so audit/export commands can decrypt later.
  for (const auto& s : config.services) {
    b.keys->install_master_key("mk-" + s.service.service_id,
                               "local-dev-master:" + s.service.service_id);
    b.completed_stores[s.service.service_id] =
        storage::open_dir_store(dir + "/completed/" + s.service.service_id);
  }
  b.route_store = storage::open_dir_store(dir + "/routes");
  b.wallet_store = storage::open_dir_store(dir + "/wallets");
  return b;
}

Simulation::Simulation(ScenarioConfig config, StoreBundle stores)
    : config_(std::move(config)), stores_(std::move(stores)) {
  gateway::GatewayConfig gc;
  gc.orphan_timeout_s = 5 * config_.proximity.loss_timeout_s;
  for (const auto& s : config_.services) {
    gc.services.push_back(gateway::ServiceSetup{s.service, s.skimming});
  }
  gateway_ = std::make_unique<gateway::Gateway>(
      gc, stores_.keys, stores_.route_store, stores_.wallet_store,
      stores_.completed_stores);
}

SimMetrics Simulation::run() {
  const Timestamp t0 = config_.start_epoch;

  std::vector<VehicleRt> vehicles;
  for (const auto& v : config_.vehicles) vehicles.emplace_back(v, t0);
  std::vector<GateRt> gates;
  for (const auto& g : config_.turnstiles) gates.emplace_back(g, t0);

  std::map<StationId, std::string> station_tokens;
  for (const auto& v : vehicles) {
    station_tokens[v.spec.station_id] = gateway_->provision_station(
        {v.spec.station_id, v.spec.vehicle_id, v.spec.service_id});
  }
  for (const auto& g : gates) {
    station_tokens[g.spec.station_id] = gateway_->provision_station(
        {g.spec.station_id, "turnstile", g.spec.service_id});
  }

  std::vector<RiderRt> riders;
  riders.reserve(config_.riders.size());
  int rider_no = 0;
  for (const auto& spec : config_.riders) {
    RiderRt rt(spec, config_.proximity);
    ApiRequest reg;
    reg.method = "POST";
    reg.path = "/v1/users";
    reg.now = t0;
    reg.body = {{"gender", to_string(spec.gender)},
                {"birth_date", format_date(spec.birth_date)},
                {"identity_key", "person-" + std::to_string(rider_no)},
                {"payment_method", "card-stub"}};
    auto resp = gateway_->route_request(reg);
    rt.user_id = resp.body.value("user_id", "");
    rt.token = resp.body.value("token", "");
    rt.agent = agent::RiderAgent(rt.user_id, config_.proximity);
    riders.push_back(std::move(rt));
    ++rider_no;
  }

  agent::SignalSampler sampler(config_.path_loss);
  std::mt19937_64 loss_rng(config_.seed ^ 0x5DEECE66DULL);
  std::bernoulli_distribution lost(config_.loss_probability);
  auto message_lost = [&]() {
    return config_.loss_probability > 0.0 && lost(loss_rng);
  };

  SimMetrics metrics;

  // Rider position along the itinerary timeline (relative seconds).
  auto rider_position = [&](const RiderRt& r, Timestamp t_rel) -> GeoPoint {
    for (const auto& leg : r.spec.legs) {
      if (leg.type == Leg::Type::bus) {
        if (t_rel >= leg.board && t_rel < leg.alight) {
          for (const auto& v : vehicles) {
            if (v.spec.vehicle_id == leg.vehicle_id) {
              return v.position(t_rel);
            }
          }
        }
      } else {
        if (t_rel >= leg.entry && t_rel < leg.exit + kGateDwellS) {
          auto gate_pos = [&](const StationId& id) -> GeoPoint {
            for (const auto& g : gates) {
              if (g.spec.station_id == id) return g.spec.pos;
            }
            return r.spec.home;
          };
          if (t_rel < leg.entry + kGateDwellS) return gate_pos(leg.entry_station);
          if (t_rel < leg.exit) {
            // Inside the paid area, away from both gates.
            GeoPoint inside = gate_pos(leg.entry_station);
            inside.lat += 0.002;
            inside.lon += 0.002;
            return inside;
          }
          return gate_pos(leg.exit_station);
        }
      }
    }
    return r.spec.home;
  };

  auto deliver = [&](RiderRt& r, const agent::ProtocolAction& action,
                     Timestamp now) {
    if (std::holds_alternative<agent::StartSessionAction>(action)) {
      const auto& a = std::get<agent::StartSessionAction>(action);
      if (message_lost()) {
        ++metrics.messages_lost;
        r.agent.on_start_failed();
        return;
      }
      ApiRequest req;
      req.method = "POST";
      req.path = "/v1/sessions";
      req.token = r.token;
      req.now = now;
      req.body = {{"station_id", a.station_id},
                  {"sample_period", a.sample_period_s},
                  {"rssi", a.rssi_dbm},
                  {"lat", a.advertisement.location.lat},
                  {"lon", a.advertisement.location.lon},
                  {"at", a.at}};
      auto resp = gateway_->route_request(req);
      if (resp.status == 201 || resp.status == 200) {
        const std::string kind = resp.body.value("kind", "on_board");
        r.agent.on_session_started(resp.body.value("session_id", ""),
                                   kind == "turnstile"
                                       ? ServiceKind::turnstile
                                       : ServiceKind::on_board,
                                   now);
      } else {
        r.agent.on_start_failed();
      }
    } else if (std::holds_alternative<agent::UpdateSessionAction>(action)) {
      const auto& a = std::get<agent::UpdateSessionAction>(action);
      if (message_lost()) {
        ++metrics.messages_lost;
        return;
      }
      ApiRequest req;
      req.method = "PATCH";
      req.path = "/v1/sessions/" + a.session_id;
      req.token = r.token;
      req.now = now;
      req.body = {{"window_index", a.window_index},
                  {"present", true},
                  {"rssi", a.rssi_dbm},
                  {"lat", a.location.lat},
                  {"lon", a.location.lon},
                  {"at", a.at}};
      gateway_->route_request(req);
    } else if (std::holds_alternative<agent::MissingDataAction>(action)) {
      const auto& a = std::get<agent::MissingDataAction>(action);
      if (message_lost()) {
        ++metrics.messages_lost;
        return;
      }
      ApiRequest req;
      req.method = "PATCH";
      req.path = "/v1/sessions/" + a.session_id;
      req.token = r.token;
      req.now = now;
      req.body = {{"window_index", a.window_index},
                  {"present", false},
                  {"consecutive_missed", a.consecutive_missed},
                  {"at", a.at}};
      gateway_->route_request(req);
    } else if (std::holds_alternative<agent::EndSessionAction>(action)) {
      const auto& a = std::get<agent::EndSessionAction>(action);
      if (message_lost()) {
        ++metrics.messages_lost;
        return;
      }
      ApiRequest req;
      req.method = "POST";
      req.path = "/v1/sessions/" + a.session_id + "/end";
      req.token = r.token;
      req.now = now;
      req.body = {{"at", a.at}};
      gateway_->route_request(req);
    } else if (std::holds_alternative<agent::OpenRequestAction>(action)) {
      const auto& a = std::get<agent::OpenRequestAction>(action);
      // The station relays the request; a lost relay is fail-closed.
      station::Authorization auth = station::Authorization::unreachable;
      if (!message_lost()) {
        ApiRequest req;
        req.method = "POST";
        req.path = "/v1/turnstile/authorize";
        req.token = station_tokens[a.station_id];
        req.now = now;
        req.body = {{"station_id", a.station_id}, {"user_id", r.user_id}};
        auto resp = gateway_->route_request(req);
        if (resp.status == 200) {
          auth = resp.body.value("decision", "") == "granted"
                     ? station::Authorization::granted
                     : station::Authorization::denied;
        }
      } else {
        ++metrics.messages_lost;
      }
      for (auto& g : gates) {
        if (g.spec.station_id == a.station_id) {
          auto cmd = g.station.handle_open_request(auth);
          if (cmd.ok() &&
              cmd.value().decision == station::GateDecision::open) {
            ++metrics.gates_opened;
          }
          break;
        }
      }
    }
  };

  std::map<StationId, station::Advertisement> latest_ads;

  for (Timestamp t_rel = 0; t_rel <= config_.duration_s;
       t_rel += config_.tick_s) {
    const Timestamp now = t0 + t_rel;

    for (auto& v : vehicles) {
      v.station.update_location(v.position(t_rel), now);
    }
    for (auto& v : vehicles) {
      if (t_rel % config_.station_interval_s == 0) {
        auto ad = v.station.next_advertisement(now);
        if (ad.ok()) latest_ads[v.spec.station_id] = ad.value();
      }
    }
    for (auto& g : gates) {
      if (t_rel % config_.station_interval_s == 0) {
        auto ad = g.station.next_advertisement(now);
        if (ad.ok()) latest_ads[g.spec.station_id] = ad.value();
      }
    }

    for (auto& r : riders) {
      if (t_rel % config_.proximity.sample_period_s == 0) {
        const GeoPoint pos = rider_position(r, t_rel);
        std::vector<std::pair<double, const station::Advertisement*>> in_range;
        for (const auto& [sid, ad] : latest_ads) {
          const double d = haversine_distance_m(pos, ad.location);
          const double rssi = sampler.rssi_from_distance(d);
          if (agent::classify(rssi, config_.proximity) ==
              agent::Range::in_range) {
            in_range.emplace_back(rssi, &ad);
          }
        }
        std::sort(in_range.begin(), in_range.end(),
                  [](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return a.second->station_id < b.second->station_id;
                  });
        // The session's own station goes first so a louder bystander
        // cannot shadow an update window.
        if (r.agent.phase() == agent::AgentPhase::in_session) {
          auto it = std::find_if(in_range.begin(), in_range.end(),
                                 [&](const auto& c) {
                                   return c.second->station_id ==
                                          r.agent.current_station();
                                 });
          if (it != in_range.end()) std::rotate(in_range.begin(), it, it + 1);
        }
        for (const auto& [rssi, ad] : in_range) {
          std::vector<agent::ProtocolAction> actions;
          if (ad->mode == station::StationMode::turnstile) {
            actions = r.agent.turnstile_flow(*ad, rssi, now);
          } else {
            actions = r.agent.observe(
                agent::RssiSample{ad->station_id, rssi, now, *ad});
          }
          if (!actions.empty()) {
            for (const auto& action : actions) deliver(r, action, now);
            break;
          }
        }
      }
      for (const auto& action : r.agent.tick(now)) deliver(r, action, now);
    }

    if (t_rel > 0 && t_rel % kAdminSweepPeriodS == 0) {
      ApiRequest req;
      req.method = "POST";
      req.path = "/v1/admin/sweep";
      req.token = "admin";
      req.now = now;
      gateway_->route_request(req);
    }
  }

  // Drain: orphaned sessions, then every still-open route.
  const Timestamp end_now = t0 + config_.duration_s;
  ApiRequest sweep;
  sweep.method = "POST";
  sweep.path = "/v1/admin/sweep";
  sweep.token = "admin";
  sweep.now = end_now;
  gateway_->route_request(sweep);
  ApiRequest flush;
  flush.method = "POST";
  flush.path = "/v1/admin/flush";
  flush.token = "admin";
  flush.now = end_now;
  gateway_->route_request(flush);

  const auto& gm = gateway_->metrics();
  metrics.sessions_started = gm.sessions_started;
  metrics.sessions_validated = gm.sessions_validated;
  metrics.sessions_rejected = gm.sessions_rejected;
  metrics.routes_closed = gm.routes_closed;
  metrics.wallet_charges = gm.wallet_charges;
  metrics.total_charged_cents = gm.total_charged_cents;
  metrics.rides_by_age_range = gm.rides_by_age_range;
  metrics.messages = gm.messages;
  return metrics;
}

Outcome<SimMetrics> run_scenario(const ScenarioConfig& config) {
  auto valid = validate(config);
  if (!valid.ok()) return valid.error();
  Simulation sim(config, memory_stores(config));
  return sim.run();
}

Outcome<SimMetrics> run_scenario(const ScenarioConfig& config,
                                 StoreBundle stores) {
  auto valid = validate(config);
  if (!valid.ok()) return valid.error();
  Simulation sim(config, std::move(stores));
  return sim.run();
}

}  // namespace bibo::sim
