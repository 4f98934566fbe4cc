#include "bibo/gateway/gateway.hpp"

#include <limits>
#include <sstream>

#include "bibo/domain/calendar.hpp"

namespace bibo::gateway {

using nlohmann::json;

namespace {

ApiResponse respond(int status, json body) {
  return ApiResponse{status, std::move(body)};
}

ApiResponse error_response(int status, const std::string& message) {
  return respond(status, json{{"error", message}});
}

int status_for(const Error& e) {
  switch (e.code) {
    case Errc::not_found: return 404;
    case Errc::conflict: return 409;
    case Errc::unauthorized: return 401;
    case Errc::forbidden: return 403;
    case Errc::invalid_input: return 400;
    case Errc::invalid_state: return 409;
    default: return 500;
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

Gender parse_gender(const std::string& g) {
  if (g == "female") return Gender::female;
  if (g == "male") return Gender::male;
  return Gender::unspecified;
}

}  // namespace

Gateway::Gateway(GatewayConfig config,
                 std::shared_ptr<privacy::KeyService> keys,
                 std::shared_ptr<storage::KvStore> route_store,
                 std::shared_ptr<storage::KvStore> wallet_store,
                 const std::map<ServiceId, std::shared_ptr<storage::KvStore>>&
                     completed_stores)
    : config_(std::move(config)),
      keys_(std::move(keys)),
      accounts_(config_.accounts, std::move(route_store),
                std::move(wallet_store)) {
  for (const auto& setup : config_.services) {
    accounts_.upsert_service(setup.service);
    auto store_it = completed_stores.find(setup.service.service_id);
    auto store = store_it != completed_stores.end()
                     ? store_it->second
                     : std::make_shared<storage::MemKvStore>();
    cores_[setup.service.service_id] = std::make_unique<transit::TransitCore>(
        setup.service, setup.skimming, store, keys_,
        "mk-" + setup.service.service_id);
  }
}

std::string Gateway::provision_station(
    const VehicleAccessIdentifier& association) {
  accounts_.map_station(association);
  std::string token = "st:" + association.station_id;
  station_tokens_[token] = association.station_id;
  return token;
}

transit::TransitCore* Gateway::transit_core(const ServiceId& id) {
  auto it = cores_.find(id);
  return it == cores_.end() ? nullptr : it->second.get();
}

Outcome<UserId> Gateway::authenticate(const std::string& token) const {
  auto it = tokens_.find(token);
  if (it == tokens_.end()) return err(Errc::unauthorized, "invalid token");
  return it->second;
}

ApiResponse Gateway::route_request(const ApiRequest& raw) {
  ApiRequest req = raw;
  if (req.body.is_null()) req.body = json::object();
  const auto parts = split_path(req.path);
  if (parts.size() < 2 || parts[0] != "v1") {
    return error_response(404, "unknown path");
  }

  if (parts[1] == "users" && req.method == "POST" && parts.size() == 2) {
    return handle_register(req);
  }
  if (parts[1] == "sessions") {
    if (req.method == "POST" && parts.size() == 2) {
      return handle_start_session(req);
    }
    if (req.method == "PATCH" && parts.size() == 3) {
      return handle_update_session(req, parts[2]);
    }
    if (req.method == "POST" && parts.size() == 4 && parts[3] == "end") {
      return handle_end_session(req, parts[2]);
    }
  }
  if (parts[1] == "turnstile" && parts.size() == 3 && parts[2] == "authorize" &&
      req.method == "POST") {
    return handle_turnstile_authorize(req);
  }
  if (parts[1] == "wallet" && req.method == "GET") return handle_wallet(req);
  if (parts[1] == "routes" && req.method == "GET") return handle_routes(req);
  if (parts[1] == "stats" && parts.size() == 3 && req.method == "GET") {
    return handle_stats(req, parts[2]);
  }
  if (parts[1] == "settlement" && parts.size() == 3 && req.method == "GET") {
    return handle_settlement(req, parts[2]);
  }
  if (parts[1] == "admin" && parts.size() == 3) {
    return handle_admin(req, parts[2]);
  }
  return error_response(404, "unknown path");
}

ApiResponse Gateway::handle_register(const ApiRequest& req) {
  auto birth = parse_date(req.body.value("birth_date", ""));
  if (!birth.ok()) return error_response(400, birth.error().message);
  auto registered = accounts_.register_user(
      parse_gender(req.body.value("gender", "unspecified")), birth.value(),
      req.body.value("identity_key", ""),
      req.body.value("payment_method", ""), req.now);
  if (!registered.ok()) {
    return error_response(status_for(registered.error()),
                          registered.error().message);
  }
  const std::string token = "tok-" + registered.value().user.user_id;
  tokens_[token] = registered.value().user.user_id;
  return respond(201, json{{"user_id", registered.value().user.user_id},
                           {"wallet_id", registered.value().wallet.wallet_id},
                           {"token", token}});
}

ApiResponse Gateway::handle_start_session(const ApiRequest& req) {
  auto user = authenticate(req.token);
  if (!user.ok()) return error_response(401, user.error().message);

  auto station = accounts_.resolve_station(req.body.value("station_id", ""));
  if (!station.ok()) return error_response(404, station.error().message);

  auto auth = accounts_.authorize(user.value());
  if (!auth.granted) return error_response(403, auth.reason);

  auto* core = transit_core(station.value().service_id);
  if (!core) return error_response(404, "service has no transit core");

  const GeoPoint pos{req.body.value("lat", 0.0), req.body.value("lon", 0.0)};
  BeaconLogEntry first;
  first.window_index = 0;
  first.present = true;
  first.rssi_dbm = req.body.value("rssi", 0.0);
  first.location = pos;
  first.at = req.body.value("at", req.now);

  auto started = core->start_session(user.value(),
                                     station.value().station_id, pos, req.now,
                                     req.body.value("sample_period", 5), first);
  if (!started.ok()) {
    return error_response(status_for(started.error()),
                          started.error().message);
  }
  ++metrics_.messages.start;
  if (!started.value().already_ongoing) {
    ++metrics_.sessions_started;
    session_service_[started.value().session_id] =
        station.value().service_id;
  }
  return respond(started.value().already_ongoing ? 200 : 201,
                 json{{"session_id", started.value().session_id},
                      {"service_id", started.value().service_id},
                      {"kind", to_string(started.value().kind)}});
}

ApiResponse Gateway::handle_update_session(const ApiRequest& req,
                                           const SessionId& session_id) {
  auto user = authenticate(req.token);
  if (!user.ok()) return error_response(401, user.error().message);

  auto svc = session_service_.find(session_id);
  if (svc == session_service_.end()) {
    return error_response(404, "unknown session");
  }
  auto* core = transit_core(svc->second);
  if (!core->has_ongoing(session_id)) {
    return error_response(409, "session no longer ongoing");
  }
  auto owner = core->owner_of(session_id);
  if (!owner.ok() || owner.value() != user.value()) {
    return error_response(403, "not your session");
  }

  BeaconLogEntry entry;
  entry.window_index = req.body.value("window_index", std::int64_t{0});
  entry.present = req.body.value("present", true);
  entry.rssi_dbm = req.body.value("rssi", 0.0);
  entry.location = {req.body.value("lat", 0.0), req.body.value("lon", 0.0)};
  entry.at = req.body.value("at", req.now);

  auto updated = core->update_session(session_id, entry);
  if (!updated.ok()) {
    return error_response(status_for(updated.error()),
                          updated.error().message);
  }
  if (entry.present) {
    ++metrics_.messages.update;
  } else {
    ++metrics_.messages.missing;
  }
  return respond(200, json{{"session_id", session_id}});
}

void Gateway::record_charges(
    const std::vector<accounts::ChargeEvent>& charges) {
  for (const auto& charge : charges) {
    ++metrics_.routes_closed;
    ++metrics_.wallet_charges;
    metrics_.total_charged_cents += charge.payment.amount.cents;
  }
}

ApiResponse Gateway::handle_end_session(const ApiRequest& req,
                                        const SessionId& session_id) {
  auto user_id = authenticate(req.token);
  if (!user_id.ok()) return error_response(401, user_id.error().message);

  auto svc = session_service_.find(session_id);
  if (svc == session_service_.end()) {
    return error_response(404, "unknown session");
  }
  auto* core = transit_core(svc->second);
  if (!core->has_ongoing(session_id)) {
    return error_response(409, "session already ended");
  }
  auto owner = core->owner_of(session_id);
  if (!owner.ok() || owner.value() != user_id.value()) {
    return error_response(403, "not your session");
  }

  auto user = accounts_.get_user(user_id.value());
  if (!user.ok()) return error_response(404, user.error().message);

  auto ended = core->end_session(session_id, req.now, user.value());
  if (!ended.ok()) {
    return error_response(status_for(ended.error()), ended.error().message);
  }
  ++metrics_.messages.end;

  const auto& result = ended.value();
  json body{{"session_id", session_id},
            {"state", to_string(result.session.state)},
            {"coverage", result.skim.coverage}};
  if (result.session.state == SessionState::validated) {
    ++metrics_.sessions_validated;
    ++metrics_.rides_by_age_range[*result.age_range];
    body["fare_cents"] = result.payment->amount.cents;

    accounts::SessionFacts facts;
    facts.session_id = session_id;
    facts.service_id = result.session.service_id;
    facts.start_ts = result.session.start_ts;
    facts.end_ts = *result.session.end_ts;
    facts.amount = result.payment->amount;
    record_charges(
        accounts_.on_validated_session(user_id.value(), facts, req.now));
  } else {
    ++metrics_.sessions_rejected;
    body["reason"] = result.skim.reason;
  }
  return respond(200, body);
}

ApiResponse Gateway::handle_turnstile_authorize(const ApiRequest& req) {
  if (!station_tokens_.count(req.token)) {
    return error_response(401, "station token required");
  }
  ++metrics_.messages.authorize;
  auto station = accounts_.resolve_station(req.body.value("station_id", ""));
  if (!station.ok()) return error_response(404, station.error().message);
  auto auth = accounts_.authorize(req.body.value("user_id", ""));
  return respond(200, json{{"decision", auth.granted ? "granted" : "denied"},
                           {"reason", auth.reason}});
}

ApiResponse Gateway::handle_wallet(const ApiRequest& req) {
  auto user = authenticate(req.token);
  if (!user.ok()) return error_response(401, user.error().message);
  auto wallet = accounts_.get_wallet(user.value());
  if (!wallet.ok()) return error_response(404, wallet.error().message);
  const auto& w = wallet.value();
  return respond(200, json{{"wallet_id", w.wallet_id},
                           {"balance_cents", w.balance.cents},
                           {"floor_cents", w.floor.cents},
                           {"currency", w.balance.currency},
                           {"blocked", w.blocked},
                           {"ledger_entries", w.ledger.size()}});
}

ApiResponse Gateway::handle_routes(const ApiRequest& req) {
  auto user = authenticate(req.token);
  if (!user.ok()) return error_response(401, user.error().message);
  // Route history is owner-only.
  const std::string requested = req.body.value("user_id", user.value());
  if (requested != user.value()) {
    return error_response(403, "route history is owner-only");
  }
  json routes = json::array();
  for (const auto& r : accounts_.routes_of(requested)) {
    routes.push_back(json{{"route_id", r.route_id},
                          {"session_ids", r.session_ids},
                          {"created_at", r.created_at},
                          {"closed", r.closed},
                          {"amount_cents", r.amount.cents}});
  }
  return respond(200, json{{"routes", routes}});
}

ApiResponse Gateway::handle_stats(const ApiRequest& req,
                                  const ServiceId& service_id) {
  if (req.token != config_.admin_token) {
    return error_response(401, "admin token required");
  }
  auto* core = transit_core(service_id);
  if (!core) return error_response(404, "unknown service");

  const Timestamp from = req.body.value("from", std::int64_t{0});
  const Timestamp to =
      req.body.value("to", std::numeric_limits<std::int64_t>::max());

  // Dashboard aggregates come exclusively from the anonymized store.
  auto records = core->decrypt_all();
  if (!records.ok()) return error_response(500, records.error().message);

  std::vector<privacy::AnonymizedSessionRecord> in_period;
  for (const auto& rec : records.value()) {
    if (rec.start_ts >= from && rec.start_ts <= to) in_period.push_back(rec);
  }

  std::ostringstream csv;
  csv << "age_range,day,rides\n";
  if (in_period.empty()) {
    return respond(200, json{{"csv", csv.str()}, {"rows", 0}});
  }

  auto report = privacy::k_report(in_period, privacy::QuasiIdentifier{});
  if (!report.ok()) return error_response(500, report.error().message);
  if (report.value().k_min < config_.k_threshold) {
    return respond(412, json{{"error", "k-anonymity below threshold"},
                             {"k_min", report.value().k_min},
                             {"k_threshold", config_.k_threshold}});
  }

  std::map<std::pair<std::string, std::string>, std::int64_t> counts;
  for (const auto& rec : in_period) {
    ++counts[{rec.age_range, format_date(date_of(rec.start_ts))}];
  }
  for (const auto& [key, count] : counts) {
    csv << key.first << "," << key.second << "," << count << "\n";
  }
  return respond(200, json{{"csv", csv.str()},
                           {"rows", counts.size()},
                           {"k_min", report.value().k_min}});
}

ApiResponse Gateway::handle_settlement(const ApiRequest& req,
                                       const CustomerId& customer_id) {
  if (req.token != config_.admin_token) {
    return error_response(401, "admin token required");
  }
  const Timestamp from = req.body.value("from", std::int64_t{0});
  const Timestamp to =
      req.body.value("to", std::numeric_limits<std::int64_t>::max());
  auto report = accounts_.settle_customer(customer_id, from, to);
  if (!report.ok()) {
    return error_response(status_for(report.error()), report.error().message);
  }
  return respond(200, json{{"customer_id", report.value().customer_id},
                           {"total_cents", report.value().total.cents},
                           {"session_count", report.value().session_count}});
}

ApiResponse Gateway::handle_admin(const ApiRequest& req,
                                  const std::string& verb) {
  if (req.token != config_.admin_token) {
    return error_response(401, "admin token required");
  }
  if (verb == "metrics" && req.method == "GET") {
    json by_age;
    for (const auto& [range, count] : metrics_.rides_by_age_range) {
      by_age[range] = count;
    }
    return respond(
        200, json{{"sessions_started", metrics_.sessions_started},
                  {"sessions_validated", metrics_.sessions_validated},
                  {"sessions_rejected", metrics_.sessions_rejected},
                  {"routes_closed", metrics_.routes_closed},
                  {"wallet_charges", metrics_.wallet_charges},
                  {"total_charged_cents", metrics_.total_charged_cents},
                  {"rides_by_age_range", by_age}});
  }
  if (verb == "sweep" && req.method == "POST") {
    // Orphan sessions first, then routes whose window lapsed.
    auto lookup = [this](const UserId& id) { return accounts_.get_user(id); };
    std::int64_t orphaned = 0;
    for (auto& [service_id, core] : cores_) {
      // Turnstile rides legitimately go silent between the entry and
      // exit gates; the silence timeout only makes sense on-board.
      if (core->service().kind == ServiceKind::turnstile) continue;
      for (const auto& result :
           core->force_end_stale(req.now, config_.orphan_timeout_s, lookup)) {
        ++orphaned;
        if (result.session.state == SessionState::validated) {
          ++metrics_.sessions_validated;
          ++metrics_.rides_by_age_range[*result.age_range];
          accounts::SessionFacts facts;
          facts.session_id = result.session.session_id;
          facts.service_id = result.session.service_id;
          facts.start_ts = result.session.start_ts;
          facts.end_ts = *result.session.end_ts;
          facts.amount = result.payment->amount;
          record_charges(accounts_.on_validated_session(
              result.session.user_id, facts, req.now));
        } else {
          ++metrics_.sessions_rejected;
        }
      }
    }
    record_charges(accounts_.sweep_expired_routes(req.now));
    return respond(200, json{{"orphaned_sessions", orphaned}});
  }
  if (verb == "flush" && req.method == "POST") {
    auto charges = accounts_.close_all_routes(req.now);
    record_charges(charges);
    return respond(200, json{{"routes_closed", charges.size()}});
  }
  if (verb == "retention-sweep" && req.method == "POST") {
    accounts::RetentionConfig cfg;
    cfg.max_age_days = req.body.value("max_age_days", 30);
    const std::size_t deleted = accounts_.retention_sweep(req.now, cfg);
    return respond(200, json{{"deleted", deleted}});
  }
  return error_response(404, "unknown admin verb");
}

}  // namespace bibo::gateway
