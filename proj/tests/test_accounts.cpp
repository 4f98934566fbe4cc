#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "bibo/accounts/accounts.hpp"
#include "bibo/storage/kv_store.hpp"

using namespace bibo;
using namespace bibo::accounts;

namespace {

constexpr Timestamp kT0 = 1622505600;  // 2021-06-01T00:00:00Z

struct Fixture {
  std::shared_ptr<storage::MemKvStore> routes =
      std::make_shared<storage::MemKvStore>();
  std::shared_ptr<storage::MemKvStore> wallets =
      std::make_shared<storage::MemKvStore>();
  AccountsCore core;

  explicit Fixture(AccountsConfig cfg = AccountsConfig{})
      : core(cfg, routes, wallets) {
    core.upsert_service(TransportService{"svc-a", "cust-a",
                                         ServiceKind::on_board,
                                         FarePlan::flat(Money{150})});
    core.upsert_service(TransportService{"svc-b", "cust-b",
                                         ServiceKind::on_board,
                                         FarePlan::flat(Money{200})});
  }

  UserId add_user(const std::string& identity = "person-1") {
    auto reg = core.register_user(Gender::female, Date{1991, 5, 1}, identity,
                                  "sepa-ref-1", kT0);
    REQUIRE(reg.ok());
    return reg.value().user.user_id;
  }

  SessionFacts facts(const std::string& sid, Timestamp start, Timestamp end,
                     std::int64_t cents, const ServiceId& svc = "svc-a") {
    SessionFacts f;
    f.session_id = sid;
    f.service_id = svc;
    f.start_ts = start;
    f.end_ts = end;
    f.amount = Money{cents};
    return f;
  }
};

}  // namespace

TEST_CASE("registration") {
  Fixture fx;
  auto reg = fx.core.register_user(Gender::male, Date{1980, 3, 2}, "person-1",
                                   "sepa-1", kT0);
  REQUIRE(reg.ok());
  CHECK(reg.value().user.user_id == "u-000001");
  CHECK(reg.value().wallet.balance == Money{0});
  CHECK(reg.value().wallet.user_id == "u-000001");
  // The wallet is durable from the moment of registration.
  CHECK_FALSE(fx.wallets->keys().empty());

  SUBCASE("one account per person") {
    auto dup = fx.core.register_user(Gender::female, Date{1990, 1, 1},
                                     "person-1", "sepa-2", kT0 + 10);
    REQUIRE_FALSE(dup.ok());
    CHECK(dup.error().code == Errc::conflict);
  }
  SUBCASE("birth dates in the future are invalid") {
    auto bad = fx.core.register_user(Gender::female, Date{2030, 1, 1},
                                     "person-2", "sepa-2", kT0);
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.error().code == Errc::invalid_input);
  }
  SUBCASE("unknown users cannot be fetched") {
    CHECK(fx.core.get_user("u-999999").error().code == Errc::not_found);
    CHECK(fx.core.get_wallet("u-999999").error().code == Errc::not_found);
  }
}

TEST_CASE("authorization") {
  Fixture fx;
  const UserId uid = fx.add_user();
  CHECK(fx.core.authorize(uid).granted);
  CHECK_FALSE(fx.core.authorize("u-424242").granted);

  // Drive the wallet through the floor; authorization flips off.
  fx.core.on_validated_session(uid, fx.facts("s-1", kT0, kT0 + 600, 60000),
                               kT0 + 600);
  fx.core.close_all_routes(kT0 + 700);
  auto wallet = fx.core.get_wallet(uid);
  REQUIRE(wallet.ok());
  CHECK(wallet.value().blocked);
  CHECK_FALSE(fx.core.authorize(uid).granted);
}

TEST_CASE("station registry") {
  Fixture fx;
  fx.core.map_station({"st-1", "bus-1", "svc-a"});
  auto res = fx.core.resolve_station("st-1");
  REQUIRE(res.ok());
  CHECK(res.value().vehicle_id == "bus-1");
  CHECK(res.value().service_id == "svc-a");
  CHECK(fx.core.resolve_station("st-2").error().code == Errc::not_found);

  // Remapping a station to another vehicle is a plain overwrite.
  fx.core.map_station({"st-1", "bus-2", "svc-b"});
  CHECK(fx.core.resolve_station("st-1").value().vehicle_id == "bus-2");
}

TEST_CASE("route assembly: transfer window") {
  Fixture fx;
  const UserId uid = fx.add_user();

  // Second ride 20 minutes after the first ends: same route.
  auto c1 = fx.core.on_validated_session(
      uid, fx.facts("s-1", kT0, kT0 + 600, 150), kT0 + 600);
  CHECK(c1.empty());
  auto c2 = fx.core.on_validated_session(
      uid, fx.facts("s-2", kT0 + 1800, kT0 + 2400, 150), kT0 + 2400);
  CHECK(c2.empty());

  // Third ride 90 minutes later: closes the old route, opens a new one.
  auto c3 = fx.core.on_validated_session(
      uid, fx.facts("s-3", kT0 + 7800, kT0 + 8400, 150), kT0 + 8400);
  REQUIRE(c3.size() == 1);
  CHECK(c3[0].payment.breakdown.size() == 2);
  // 150 full + 150 discounted half = 225.
  CHECK(c3[0].payment.amount == Money{225});

  auto rest = fx.core.close_all_routes(kT0 + 9000);
  REQUIRE(rest.size() == 1);
  CHECK(rest[0].payment.amount == Money{150});

  auto wallet = fx.core.get_wallet(uid);
  REQUIRE(wallet.ok());
  CHECK(wallet.value().balance == Money{-375});
  CHECK(wallet.value().ledger_consistent());
  CHECK(fx.core.routes_closed() == 2);
}

TEST_CASE("sweep closes only lapsed routes") {
  Fixture fx;
  const UserId u1 = fx.add_user("person-1");
  const UserId u2 = fx.add_user("person-2");
  fx.core.on_validated_session(u1, fx.facts("s-1", kT0, kT0 + 600, 150),
                               kT0 + 600);
  fx.core.on_validated_session(u2, fx.facts("s-2", kT0 + 3000, kT0 + 3600, 150),
                               kT0 + 3600);
  // At kT0+4300 only u1's route (ended kT0+600) has outlived the hour.
  auto charges = fx.core.sweep_expired_routes(kT0 + 4300);
  REQUIRE(charges.size() == 1);
  CHECK(charges[0].user_id == u1);
  CHECK(fx.core.routes_of(u2).size() == 1);
  CHECK_FALSE(fx.core.routes_of(u2)[0].closed);
}

TEST_CASE("route payment discounts") {
  Fixture fx;
  const UserId uid = fx.add_user();

  SUBCASE("subscription zeroes its sessions first") {
    AccountsConfig cfg;
    Subscription sub;
    sub.user_id = "u-000001";
    sub.service_id = "svc-a";
    sub.valid_from = kT0;
    sub.valid_to = kT0 + 86400;
    cfg.discounts.subscriptions.push_back(sub);
    Fixture fx2(cfg);
    const UserId u2 = fx2.add_user();
    REQUIRE(u2 == "u-000001");
    fx2.core.on_validated_session(u2, fx2.facts("s-1", kT0, kT0 + 600, 150),
                                  kT0 + 600);
    fx2.core.on_validated_session(
        u2, fx2.facts("s-2", kT0 + 900, kT0 + 1500, 200, "svc-b"), kT0 + 1500);
    auto charges = fx2.core.close_all_routes(kT0 + 2000);
    REQUIRE(charges.size() == 1);
    // Covered session free, the svc-b session becomes the first paid
    // one and goes at full price.
    CHECK(charges[0].payment.amount == Money{200});
  }

  SUBCASE("odd half cents round half-up") {
    fx.core.on_validated_session(uid, fx.facts("s-1", kT0, kT0 + 600, 150),
                                 kT0 + 600);
    fx.core.on_validated_session(
        uid, fx.facts("s-2", kT0 + 900, kT0 + 1500, 155), kT0 + 1500);
    auto charges = fx.core.close_all_routes(kT0 + 2000);
    REQUIRE(charges.size() == 1);
    // 150 + round_half_up(155 / 2) = 150 + 78.
    CHECK(charges[0].payment.amount == Money{228});
  }
}

TEST_CASE("wallet floor and blocking") {
  Fixture fx;
  const UserId uid = fx.add_user();

  SUBCASE("balance 1000 charged 225") {
    auto w = fx.core.get_wallet(uid).value();
    w.apply(kT0, Money{1000}, "top-up");
    // No top-up API in scope; emulate by charging against a route and
    // checking deltas instead.
    fx.core.on_validated_session(uid, fx.facts("s-1", kT0, kT0 + 600, 225),
                                 kT0 + 600);
    fx.core.close_all_routes(kT0 + 700);
    auto after = fx.core.get_wallet(uid).value();
    CHECK(after.balance == Money{-225});
    CHECK_FALSE(after.blocked);
  }

  SUBCASE("charges below the floor still post, then block") {
    // Two charges: -400 leaves the wallet above the -500 floor, the
    // next -225 lands at -625 and flags the wallet.
    fx.core.on_validated_session(uid, fx.facts("s-1", kT0, kT0 + 600, 400),
                                 kT0 + 600);
    fx.core.close_all_routes(kT0 + 700);
    auto mid = fx.core.get_wallet(uid).value();
    CHECK(mid.balance == Money{-400});
    CHECK_FALSE(mid.blocked);

    fx.core.on_validated_session(
        uid, fx.facts("s-2", kT0 + 8000, kT0 + 8600, 225), kT0 + 8600);
    fx.core.close_all_routes(kT0 + 8700);
    auto after = fx.core.get_wallet(uid).value();
    CHECK(after.balance == Money{-625});
    CHECK(after.blocked);
    CHECK(after.ledger_consistent());
  }
}

TEST_CASE("retention sweep boundary") {
  Fixture fx;
  const UserId uid = fx.add_user();
  const Timestamp day = 86400;

  // Three routes closed 31, 30, and 29 days before the sweep.
  for (int age_days : {31, 30, 29}) {
    const Timestamp end = kT0 + (31 - age_days) * day;
    fx.core.on_validated_session(
        uid,
        fx.facts("s-" + std::to_string(age_days), end - 600, end, 150),
        end);
    fx.core.close_all_routes(end);
  }
  REQUIRE(fx.core.routes_of(uid).size() == 3);

  const Timestamp now = kT0 + 31 * day;
  RetentionConfig cfg;  // 30 days
  // closed_at <= now - 30 d is purged: the 31- and 30-day-old records.
  CHECK(fx.core.retention_sweep(now, cfg) == 2);
  auto remaining = fx.core.routes_of(uid);
  REQUIRE(remaining.size() == 1);
  CHECK(remaining[0].closed_at == kT0 + 2 * day);
  // A second sweep is a no-op.
  CHECK(fx.core.retention_sweep(now, cfg) == 0);
}

TEST_CASE("settlement per customer") {
  Fixture fx;
  const UserId uid = fx.add_user();
  // Route 1: one svc-a session (150) and one discounted svc-b session
  // (200 -> 100): route total 250, split 150 / 100 by service.
  fx.core.on_validated_session(uid, fx.facts("s-1", kT0, kT0 + 600, 150),
                               kT0 + 600);
  fx.core.on_validated_session(
      uid, fx.facts("s-2", kT0 + 900, kT0 + 1500, 200, "svc-b"), kT0 + 1500);
  fx.core.close_all_routes(kT0 + 1600);

  auto a = fx.core.settle_customer("cust-a", kT0, kT0 + 2000);
  REQUIRE(a.ok());
  CHECK(a.value().total == Money{150});
  CHECK(a.value().session_count == 1);

  auto b = fx.core.settle_customer("cust-b", kT0, kT0 + 2000);
  REQUIRE(b.ok());
  CHECK(b.value().total == Money{100});

  SUBCASE("outside the period nothing accrues") {
    auto none = fx.core.settle_customer("cust-a", kT0 + 3000, kT0 + 4000);
    REQUIRE(none.ok());
    CHECK(none.value().total == Money{0});
    CHECK(none.value().session_count == 0);
  }
  SUBCASE("unknown customers are not found") {
    CHECK(fx.core.settle_customer("cust-zz", kT0, kT0 + 2000).error().code ==
          Errc::not_found);
  }
  SUBCASE("conservation counters agree") {
    CHECK(fx.core.total_debited() == Money{250});
    CHECK(fx.core.total_route_payments() == Money{250});
    CHECK(fx.core.total_settled() == Money{250});
  }
}
