#include "bibo/accounts/accounts.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "bibo/domain/calendar.hpp"

namespace bibo::accounts {

using nlohmann::json;

AccountsCore::AccountsCore(AccountsConfig config,
                           std::shared_ptr<storage::KvStore> route_store,
                           std::shared_ptr<storage::KvStore> wallet_store)
    : config_(std::move(config)),
      route_store_(std::move(route_store)),
      wallet_store_(std::move(wallet_store)),
      total_debited_(0, config_.currency),
      total_route_payments_(0, config_.currency) {}

Outcome<RegisteredUser> AccountsCore::register_user(
    Gender gender, const Date& birth_date, const std::string& identity_key,
    const std::string& payment_method_ref, Timestamp now) {
  if (!valid_date(birth_date) || birth_date > date_of(now)) {
    return err(Errc::invalid_input, "birth_date invalid or in the future");
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (identity_index_.count(identity_key)) {
    return err(Errc::conflict, "natural person already registered");
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "u-%06lld",
                static_cast<long long>(++next_user_));
  User user;
  user.user_id = buf;
  user.gender = gender;
  user.birth_date = birth_date;
  user.registered_at = now;

  Wallet wallet;
  wallet.wallet_id = std::string("w-") + buf;
  wallet.user_id = user.user_id;
  wallet.balance = Money{0, config_.currency};
  wallet.floor = config_.wallet_floor;
  // payment_method_ref is a stubbed ledger reference; recorded only.
  (void)payment_method_ref;

  identity_index_[identity_key] = user.user_id;
  users_[user.user_id] = user;
  wallets_[user.user_id] = wallet;
  persist_wallet_locked(wallet);
  return RegisteredUser{user, wallet};
}

Outcome<User> AccountsCore::get_user(const UserId& user_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = users_.find(user_id);
  if (it == users_.end()) return err(Errc::not_found, "unknown user");
  return it->second;
}

Outcome<Wallet> AccountsCore::get_wallet(const UserId& user_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = wallets_.find(user_id);
  if (it == wallets_.end()) return err(Errc::not_found, "unknown user");
  return it->second;
}

AuthDecision AccountsCore::authorize(const UserId& user_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = wallets_.find(user_id);
  if (it == wallets_.end()) return {false, "unknown-user"};
  if (it->second.blocked) return {false, "blocked"};
  return {true, ""};
}

void AccountsCore::upsert_service(const TransportService& service) {
  std::lock_guard<std::mutex> lock(mu_);
  services_[service.service_id] = service;
  customers_.insert(service.customer_id);
}

Outcome<TransportService> AccountsCore::get_service(
    const ServiceId& service_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = services_.find(service_id);
  if (it == services_.end()) return err(Errc::not_found, "unknown service");
  return it->second;
}

void AccountsCore::map_station(const VehicleAccessIdentifier& association) {
  std::lock_guard<std::mutex> lock(mu_);
  stations_[association.station_id] = association;
}

Outcome<VehicleAccessIdentifier> AccountsCore::resolve_station(
    const StationId& station_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = stations_.find(station_id);
  if (it == stations_.end()) return err(Errc::not_found, "unknown station");
  return it->second;
}

bool AccountsCore::subscribed_locked(const UserId& user_id,
                                     const ServiceId& service_id,
                                     Timestamp at) const {
  for (const auto& sub : config_.discounts.subscriptions) {
    if (sub.user_id == user_id && sub.service_id == service_id &&
        at >= sub.valid_from && at <= sub.valid_to) {
      return true;
    }
  }
  return false;
}

RoutePayment AccountsCore::compute_route_payment(
    const RouteRecord& route, const std::vector<SessionFacts>& sessions,
    const UserId& user_id) const {
  RoutePayment payment;
  payment.route_id = route.route_id;
  payment.amount = Money{0, config_.currency};
  bool first_paid_seen = false;
  for (const auto& s : sessions) {
    RoutePaymentLine line;
    line.session_id = s.session_id;
    line.gross = s.amount;
    if (subscribed_locked(user_id, s.service_id, s.start_ts)) {
      // Subscription zeroes its session before discount ordering.
      line.discount = s.amount;
    } else if (!first_paid_seen) {
      line.discount = Money{0, config_.currency};
      first_paid_seen = true;
    } else {
      // Charged amounts round half-up; the discount is the remainder.
      const std::int64_t charged =
          round_half_up(static_cast<double>(s.amount.cents) *
                        (1.0 - config_.discounts.transfer_discount));
      line.discount = Money{s.amount.cents - charged, config_.currency};
    }
    payment.amount += line.gross - line.discount;
    payment.breakdown.push_back(std::move(line));
  }
  return payment;
}

ChargeEvent AccountsCore::close_route_locked(const UserId& user_id,
                                             Timestamp now) {
  OpenRoute open = std::move(open_routes_.at(user_id));
  open_routes_.erase(user_id);

  RoutePayment payment =
      compute_route_payment(open.record, open.sessions, user_id);
  open.record.amount = payment.amount;
  open.record.closed_at = now;
  open.record.closed = true;

  Wallet& wallet = wallets_.at(user_id);
  wallet.apply(now, Money{-payment.amount.cents, config_.currency},
               "route:" + open.record.route_id);
  if (wallet.balance < wallet.floor) wallet.blocked = true;
  persist_wallet_locked(wallet);
  persist_route_locked(open.record);

  for (std::size_t i = 0; i < open.sessions.size(); ++i) {
    const auto& s = open.sessions[i];
    const auto& line = payment.breakdown[i];
    auto svc = services_.find(s.service_id);
    if (svc != services_.end()) {
      settlement_ledger_.push_back(SettlementLine{
          svc->second.customer_id, s.end_ts, line.gross - line.discount});
    }
  }

  total_debited_ += payment.amount;
  total_route_payments_ += payment.amount;
  ++routes_closed_;
  return ChargeEvent{user_id, std::move(payment), now};
}

std::vector<ChargeEvent> AccountsCore::on_validated_session(
    const UserId& user_id, const SessionFacts& facts, Timestamp now) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<ChargeEvent> charges;

  auto it = open_routes_.find(user_id);
  if (it != open_routes_.end() &&
      facts.start_ts - it->second.last_end_ts >
          config_.routes.transfer_window_s) {
    charges.push_back(close_route_locked(user_id, now));
  }
  if (!open_routes_.count(user_id)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "r-%06lld",
                  static_cast<long long>(++next_route_));
    OpenRoute open;
    open.record.route_id = buf;
    open.record.user_id = user_id;
    open.record.created_at = now;
    open_routes_.emplace(user_id, std::move(open));
  }
  OpenRoute& open = open_routes_.at(user_id);
  open.record.session_ids.push_back(facts.session_id);
  open.sessions.push_back(facts);
  open.last_end_ts = facts.end_ts;
  return charges;
}

std::vector<ChargeEvent> AccountsCore::sweep_expired_routes(Timestamp now) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<UserId> expired;
  for (const auto& [user_id, open] : open_routes_) {
    if (now - open.last_end_ts > config_.routes.transfer_window_s) {
      expired.push_back(user_id);
    }
  }
  std::vector<ChargeEvent> charges;
  for (const auto& user_id : expired) {
    charges.push_back(close_route_locked(user_id, now));
  }
  return charges;
}

std::vector<ChargeEvent> AccountsCore::close_all_routes(Timestamp now) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<UserId> users;
  for (const auto& [user_id, open] : open_routes_) users.push_back(user_id);
  std::vector<ChargeEvent> charges;
  for (const auto& user_id : users) {
    charges.push_back(close_route_locked(user_id, now));
  }
  return charges;
}

static json route_to_json(const RouteRecord& r) {
  json j;
  j["route_id"] = r.route_id;
  j["user_id"] = r.user_id;
  j["session_ids"] = r.session_ids;
  j["created_at"] = r.created_at;
  j["closed_at"] = r.closed_at;
  j["amount_cents"] = r.amount.cents;
  j["currency"] = r.amount.currency;
  return j;
}

static RouteRecord route_from_json(const json& j) {
  RouteRecord r;
  r.route_id = j.value("route_id", "");
  r.user_id = j.value("user_id", "");
  r.session_ids = j.value("session_ids", std::vector<std::string>{});
  r.created_at = j.value("created_at", Timestamp{0});
  r.closed_at = j.value("closed_at", Timestamp{0});
  r.amount = Money{j.value("amount_cents", std::int64_t{0}),
                   j.value("currency", std::string{"EUR"})};
  r.closed = true;
  return r;
}

void AccountsCore::persist_route_locked(const RouteRecord& route) {
  const std::string payload = route_to_json(route).dump();
  route_store_->put(route.route_id,
                    std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

void AccountsCore::persist_wallet_locked(const Wallet& wallet) {
  json j;
  j["wallet_id"] = wallet.wallet_id;
  j["user_id"] = wallet.user_id;
  j["balance_cents"] = wallet.balance.cents;
  j["floor_cents"] = wallet.floor.cents;
  j["currency"] = wallet.balance.currency;
  j["blocked"] = wallet.blocked;
  j["ledger_entries"] = wallet.ledger.size();
  const std::string payload = j.dump();
  wallet_store_->put(wallet.wallet_id,
                     std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

std::vector<RouteRecord> AccountsCore::routes_of(const UserId& user_id) const {
  std::vector<RouteRecord> out;
  for (const auto& key : route_store_->keys()) {
    auto raw = route_store_->get(key);
    if (!raw.ok()) continue;
    auto j = json::parse(raw.value().begin(), raw.value().end(), nullptr, false);
    if (j.is_discarded()) continue;
    RouteRecord r = route_from_json(j);
    if (r.user_id == user_id) out.push_back(std::move(r));
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto it = open_routes_.find(user_id);
  if (it != open_routes_.end()) out.push_back(it->second.record);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.route_id < b.route_id;
  });
  return out;
}

std::size_t AccountsCore::retention_sweep(Timestamp now,
                                          const RetentionConfig& config) {
  const Timestamp cutoff =
      now - static_cast<Timestamp>(config.max_age_days) * 86400;
  std::size_t deleted = 0;
  for (const auto& key : route_store_->keys()) {
    auto raw = route_store_->get(key);
    if (!raw.ok()) continue;
    auto j = json::parse(raw.value().begin(), raw.value().end(), nullptr, false);
    if (j.is_discarded()) continue;
    // Inclusive boundary: a record aged exactly max_age_days goes.
    if (j.value("closed_at", Timestamp{0}) <= cutoff) {
      if (route_store_->erase(key)) ++deleted;
    }
  }
  return deleted;
}

Outcome<SettlementReport> AccountsCore::settle_customer(
    const CustomerId& customer_id, Timestamp from, Timestamp to) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!customers_.count(customer_id)) {
    return err(Errc::not_found, "unknown customer");
  }
  SettlementReport report;
  report.customer_id = customer_id;
  report.from = from;
  report.to = to;
  report.total = Money{0, config_.currency};
  for (const auto& line : settlement_ledger_) {
    if (line.customer_id == customer_id && line.session_end_ts >= from &&
        line.session_end_ts <= to) {
      report.total += line.net;
      ++report.session_count;
    }
  }
  return report;
}

Money AccountsCore::total_debited() const {
  std::lock_guard<std::mutex> lock(mu_);
  return total_debited_;
}

Money AccountsCore::total_route_payments() const {
  std::lock_guard<std::mutex> lock(mu_);
  return total_route_payments_;
}

Money AccountsCore::total_settled() const {
  std::lock_guard<std::mutex> lock(mu_);
  Money total{0, config_.currency};
  for (const auto& line : settlement_ledger_) total += line.net;
  return total;
}

std::int64_t AccountsCore::routes_closed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return routes_closed_;
}

}  // namespace bibo::accounts
